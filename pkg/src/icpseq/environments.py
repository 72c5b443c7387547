"""Time-axis environments and comparison pairs.

An *environment* is a contiguous block of time indices, written 1-based
inclusive.  A grid of interior points induces the collection of all
intervals between any two grid boundaries (including the full range);
change points induce the consecutive blocks between them.

Comparison sets pair environments for the block statistics.  ``f1``
takes every ordered pair of disjoint environments; ``f2`` pairs each
environment with its complement inside ``{1..n}``.  Complements are
generally not contiguous, so pair sides are stored as sorted index
arrays rather than as ``Environment`` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    EmptyComparisonSetError,
    InvalidChangePointsError,
    InvalidGridError,
)

COMPARISON_KINDS = ("f1", "f2")

#: Extra rows demanded of each environment beyond the regression width.
MIN_SIZE_MARGIN = 5


@dataclass(frozen=True)
class Environment:
    """Contiguous block ``{start .. end}`` of 1-based time indices."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (1 <= int(self.start) <= int(self.end)):
            raise ValueError(f"need 1 <= start <= end, got ({self.start}, {self.end})")
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "end", int(self.end))

    @property
    def size(self) -> int:
        return self.end - self.start + 1

    @property
    def indices(self) -> np.ndarray:
        """The block as a sorted array of 1-based time indices."""
        return np.arange(self.start, self.end + 1, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class EnvironmentCollection:
    """A non-empty list of environments over a series of length ``n``."""

    environments: tuple[Environment, ...]
    n: int

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise ValueError("n must be positive")
        envs = tuple(self.environments)
        if not envs:
            raise ValueError("environment collection may not be empty")
        for env in envs:
            if env.end > self.n:
                raise ValueError(f"environment {env} exceeds n={self.n}")
        object.__setattr__(self, "environments", envs)
        object.__setattr__(self, "n", int(self.n))

    def __len__(self) -> int:
        return len(self.environments)

    def __iter__(self):
        return iter(self.environments)


@dataclass(frozen=True, eq=False)
class ComparisonSet:
    """Ordered pairs of index blocks to compare, with shared region storage.

    ``regions`` holds each distinct index block once; ``pair_indices``
    lists ordered ``(left, right)`` positions into it.  Sharing regions
    lets evaluators fit each block once and reuse it across pairs.
    """

    regions: tuple[np.ndarray, ...]
    pair_indices: tuple[tuple[int, int], ...]
    kind: str
    n: int

    def __post_init__(self) -> None:
        if self.kind not in COMPARISON_KINDS:
            raise ValueError(f"kind must be one of {COMPARISON_KINDS}")
        if not self.pair_indices:
            raise EmptyComparisonSetError("comparison set has no pairs")
        regions = tuple(np.asarray(r, dtype=np.int64) for r in self.regions)
        for r in regions:
            if r.ndim != 1 or r.size == 0:
                raise ValueError("each region must be a non-empty index vector")
            if r[0] < 1 or r[-1] > self.n or np.any(np.diff(r) <= 0):
                raise ValueError("regions must be sorted 1-based indices within 1..n")
        for left, right in self.pair_indices:
            if not (0 <= left < len(regions) and 0 <= right < len(regions)):
                raise ValueError("pair refers to a missing region")
            if left == right:
                raise ValueError("a pair must reference two distinct regions")
        object.__setattr__(self, "regions", regions)

    def __len__(self) -> int:
        return len(self.pair_indices)

    @property
    def pairs(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """The ordered pairs as ``(left_indices, right_indices)`` arrays."""
        return tuple(
            (self.regions[i], self.regions[j]) for i, j in self.pair_indices
        )


def grid_environments(n: int, grid: Sequence[int]) -> EnvironmentCollection:
    """All intervals between two boundaries of ``{0, g_1, ..., g_m, n}``.

    The count is ``(m + 2) choose 2`` for ``m`` interior grid points.  An
    empty grid yields the single full-range environment.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    points = [int(g) for g in grid]
    if points != sorted(set(points)):
        raise InvalidGridError(f"grid {points} is not strictly increasing")
    if points and (points[0] <= 0 or points[-1] >= n):
        raise InvalidGridError(f"grid {points} must lie strictly inside (0, {n})")
    boundaries = [0, *points, n]
    envs = [
        Environment(boundaries[i] + 1, boundaries[j])
        for i in range(len(boundaries))
        for j in range(i + 1, len(boundaries))
    ]
    return EnvironmentCollection(environments=tuple(envs), n=n)


def changepoint_environments(n: int, change_points: Sequence[int]) -> EnvironmentCollection:
    """Consecutive blocks split at the given change points.

    ``change_points`` are the last indices of each block but the final
    one; they must be strictly increasing inside ``{1 .. n-1}``.  An
    empty sequence yields the single full-range block.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    points = [int(c) for c in change_points]
    if points != sorted(set(points)):
        raise InvalidChangePointsError(f"change points {points} not strictly increasing")
    if points and (points[0] < 1 or points[-1] > n - 1):
        raise InvalidChangePointsError(
            f"change points {points} must lie in 1..{n - 1}"
        )
    boundaries = [0, *points, n]
    envs = [
        Environment(boundaries[k] + 1, boundaries[k + 1])
        for k in range(len(boundaries) - 1)
    ]
    return EnvironmentCollection(environments=tuple(envs), n=n)


def _effective_size(indices: np.ndarray, row_offset: int) -> int:
    return int(np.sum(indices > row_offset))


def comparison_set(
    env: EnvironmentCollection,
    kind: str = "f2",
    min_size: int = 2,
    row_offset: int = 0,
) -> ComparisonSet:
    """Build the ordered comparison pairs of the given kind.

    Parameters
    ----------
    env:
        Environment collection over ``{1..n}``.
    kind:
        ``"f1"`` for all ordered pairs of disjoint environments, ``"f2"``
        for each environment against its complement.
    min_size:
        Minimum *effective* rows per side.  Callers should pass at least
        the downstream regression width plus :data:`MIN_SIZE_MARGIN`.
    row_offset:
        Leading rows unavailable to a lagged design; indices at or below
        it do not count towards effective sizes.

    Raises
    ------
    EmptyComparisonSetError
        If no pair survives the size filter.
    """
    kind = str(kind).lower()
    if kind not in COMPARISON_KINDS:
        raise ValueError(f"kind must be one of {COMPARISON_KINDS}")
    min_size = int(min_size)
    if min_size < 2:
        raise ValueError("min_size must be at least 2")
    row_offset = int(row_offset)
    if row_offset < 0:
        raise ValueError("row_offset must be non-negative")

    regions: list[np.ndarray] = []
    region_pos: dict[bytes, int] = {}

    def intern(indices: np.ndarray) -> int:
        key = indices.tobytes()
        pos = region_pos.get(key)
        if pos is None:
            pos = len(regions)
            regions.append(indices)
            region_pos[key] = pos
        return pos

    pairs: list[tuple[int, int]] = []
    if kind == "f1":
        envs = list(env.environments)
        for a in envs:
            for b in envs:
                if a is b:
                    continue
                if a.end < b.start or b.end < a.start:
                    ia, ib = a.indices, b.indices
                    if (
                        _effective_size(ia, row_offset) >= min_size
                        and _effective_size(ib, row_offset) >= min_size
                    ):
                        pairs.append((intern(ia), intern(ib)))
    else:
        full = np.arange(1, env.n + 1, dtype=np.int64)
        for e in env.environments:
            ie = e.indices
            mask = np.ones(env.n, dtype=bool)
            mask[ie - 1] = False
            comp = full[mask]
            if comp.size == 0:
                continue
            if (
                _effective_size(ie, row_offset) >= min_size
                and _effective_size(comp, row_offset) >= min_size
            ):
                pairs.append((intern(ie), intern(comp)))

    if not pairs:
        raise EmptyComparisonSetError(
            f"no {kind} pair with both sides of effective size >= {min_size}"
        )
    return ComparisonSet(
        regions=tuple(regions), pair_indices=tuple(pairs), kind=kind, n=env.n
    )


def default_grid(n: int) -> tuple[int, ...]:
    """Interior grid of ``m = max(1, floor(ln n))`` roughly equispaced points.

    Point ``i`` is ``ceil(i * n / (m + 1))``; duplicates and endpoints are
    dropped.  Requires ``n >= 4``.
    """
    n = int(n)
    if n < 4:
        raise ValueError("default_grid requires n >= 4")
    m = max(1, int(math.floor(math.log(n))))
    points: list[int] = []
    for i in range(1, m + 1):
        g = math.ceil(i * n / (m + 1))
        if 0 < g < n and (not points or g > points[-1]):
            points.append(g)
    return tuple(points)


def equidistant_grid(n: int, m: int) -> tuple[int, ...]:
    """``m`` interior points at ``round(i * n / (m + 1))``, deduplicated."""
    n, m = int(n), int(m)
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 and m >= 1")
    points: list[int] = []
    for i in range(1, m + 1):
        g = int(round(i * n / (m + 1)))
        if 0 < g < n and (not points or g > points[-1]):
            points.append(g)
    return tuple(points)


def default_comparison(
    n: int,
    kind: str = "f2",
    grid: Sequence[int] | None = None,
    width: int = 1,
    row_offset: int = 0,
    min_size: int | None = None,
) -> ComparisonSet:
    """Convenience constructor used by the engine, the CLI and experiments.

    Builds grid environments (default grid when none is given) and the
    requested comparison kind with ``min_size = width + MIN_SIZE_MARGIN``
    unless overridden.
    """
    if grid is None:
        grid = default_grid(n)
    envs = grid_environments(n, grid)
    if min_size is None:
        min_size = int(width) + MIN_SIZE_MARGIN
    return comparison_set(envs, kind=kind, min_size=max(2, min_size), row_offset=row_offset)
