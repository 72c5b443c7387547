"""Exception types shared across the package.

Every error raised deliberately by this library derives from
:class:`IcpseqError`, so callers can catch one base class at API
boundaries.  Plain ``ValueError`` is reserved for violated call
preconditions (bad argument shapes, out-of-range options).
"""

from __future__ import annotations


class IcpseqError(Exception):
    """Base class for all library-specific errors."""


class RankDeficientError(IcpseqError):
    """A design (or an environment slice of it) has numerically deficient rank."""


class DegenerateResidualsError(IcpseqError):
    """The response lies in the column space of the design; residuals are ~0."""


class LagTooLargeError(IcpseqError):
    """Requested lag order leaves fewer than two usable rows."""


class InvalidGridError(IcpseqError):
    """Grid points are not strictly increasing integers inside (0, n)."""


class InvalidChangePointsError(IcpseqError):
    """Change points are not strictly increasing integers in {1, ..., n-1}."""


class EmptyComparisonSetError(IcpseqError):
    """No environment pair survived the size filter."""


class ZeroDenominatorError(IcpseqError):
    """A variance-ratio style statistic hit a (near-)zero denominator."""


class DegenerateKernelError(IcpseqError):
    """Median-heuristic bandwidth is undefined: all pairwise distances are zero."""


class TooManySubsetsError(IcpseqError):
    """Subset enumeration would exceed the configured budget."""


class ParseError(IcpseqError):
    """A CSV cell or row could not be parsed as finite numeric data."""


class MissingTargetError(IcpseqError):
    """The requested response column is absent from the CSV header."""
