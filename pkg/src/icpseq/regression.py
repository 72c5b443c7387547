"""Least-squares primitives: datasets, designs, scaled residuals, lags.

Everything in this module is pure and deterministic.  Fits go through a
singular value decomposition rather than the normal equations, rank
problems raise :class:`~icpseq.exceptions.RankDeficientError` instead of
silently pseudo-inverting, and all outputs are float64 arrays.

The central object is the *scaled residual* vector: the response is
projected onto the orthogonal complement of the design's column space
and normalised to unit Euclidean length.  Under a correctly specified
linear Gaussian model the result does not depend on the unknown
coefficients or noise scale, which is what permits exact resampling
calibration downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    DegenerateResidualsError,
    LagTooLargeError,
    RankDeficientError,
)

_EPS = float(np.finfo(np.float64).eps)

#: Residual norms below this are treated as "response lies in the span".
DEGENERATE_RESIDUAL_NORM = 1e-12


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _as_float_matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Time-ordered response vector and predictor matrix.

    Row order is observation order.  Nothing in the package reads
    timestamps; only the ordering of rows matters.

    Parameters
    ----------
    y:
        Response, shape ``(n,)``.
    x:
        Predictors, shape ``(n, d)`` with ``d >= 1``.
    column_names:
        Optional predictor names; defaults to ``X1 ... Xd``.
    """

    y: np.ndarray
    x: np.ndarray
    column_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        y = _as_float_vector(self.y, "y")
        x = _as_float_matrix(self.x, "x")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x has {x.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if y.shape[0] < 2:
            raise ValueError("a dataset needs at least two rows")
        if x.shape[1] < 1:
            raise ValueError("a dataset needs at least one predictor column")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise ValueError("dataset values must all be finite")
        names = tuple(self.column_names)
        if not names:
            names = tuple(f"X{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValueError(
                f"{len(names)} column names for {x.shape[1]} predictor columns"
            )
        if len(set(names)) != len(names):
            raise ValueError("predictor column names must be unique")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.x.shape[1])


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """A dense regression design with explicit intercept handling.

    ``row_offset`` records how many leading observations of the original
    series the design does not cover (``p`` for a lag-``p`` design): row
    ``i`` of ``columns`` corresponds to time point ``row_offset + i + 1``
    in 1-based terms.
    """

    columns: np.ndarray
    has_intercept: bool = True
    row_offset: int = 0

    def __post_init__(self) -> None:
        cols = _as_float_matrix(self.columns, "columns")
        if cols.shape[0] < 1 or cols.shape[1] < 1:
            raise ValueError("design must have at least one row and one column")
        if not np.all(np.isfinite(cols)):
            raise ValueError("design entries must all be finite")
        if int(self.row_offset) < 0:
            raise ValueError("row_offset must be non-negative")
        if self.has_intercept and not np.all(cols[:, 0] == 1.0):
            raise ValueError("has_intercept requires an all-ones first column")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "row_offset", int(self.row_offset))

    @property
    def n_rows(self) -> int:
        return int(self.columns.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.columns.shape[1])

    @property
    def n_total(self) -> int:
        """Number of time points in the underlying series."""
        return self.row_offset + self.n_rows

    def orthonormal_basis(self) -> np.ndarray:
        """Orthonormal basis of the column space, cached after first use.

        Raises
        ------
        RankDeficientError
            If the numerical rank is below the number of columns.
        """
        cached = self.__dict__.get("_basis")
        if cached is None:
            u, s, _ = np.linalg.svd(self.columns, full_matrices=False)
            _check_rank(s, self.columns.shape, "design matrix")
            cached = u
            object.__setattr__(self, "_basis", cached)
        return cached


@dataclass(frozen=True, eq=False)
class ScaledResiduals:
    """Unit-norm residual vector of a response projected off a design.

    Invariants enforced at construction: unit Euclidean norm (within
    1e-10) and orthogonality to every design column (within 1e-8 of the
    column's own scale).
    """

    values: np.ndarray
    design: DesignMatrix

    def __post_init__(self) -> None:
        vals = _as_float_vector(self.values, "values")
        if vals.shape[0] != self.design.n_rows:
            raise ValueError("residual length must match design rows")
        if abs(float(np.linalg.norm(vals)) - 1.0) > 1e-10:
            raise ValueError("scaled residuals must have unit norm")
        products = self.design.columns.T @ vals
        scales = np.linalg.norm(self.design.columns, axis=0)
        if np.any(np.abs(products) > 1e-8 * np.maximum(scales, 1.0)):
            raise ValueError("scaled residuals must be orthogonal to the design")
        object.__setattr__(self, "values", vals)

    @property
    def n_eff(self) -> int:
        return int(self.values.shape[0])


def _check_rank(singular_values: np.ndarray, shape: tuple[int, int], what: str) -> None:
    m = shape[1]
    if singular_values.size == 0:
        raise RankDeficientError(f"{what} has no columns")
    tol = float(singular_values[0]) * max(shape) * _EPS
    rank = int(np.sum(singular_values > tol))
    if rank < m:
        raise RankDeficientError(
            f"{what} has numerical rank {rank} < {m} columns (tolerance {tol:.3e})"
        )


def least_squares(a: np.ndarray, b: np.ndarray, what: str = "design matrix") -> np.ndarray:
    """Minimum-norm least squares via SVD with a hard rank check.

    ``b`` may be a vector or a matrix of stacked right-hand sides.
    Raises :class:`RankDeficientError` when ``a`` is numerically rank
    deficient; this library never silently regularises.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("least_squares expects a two-dimensional design")
    if a.shape[0] < a.shape[1]:
        raise RankDeficientError(
            f"{what} has {a.shape[0]} rows for {a.shape[1]} columns"
        )
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    _check_rank(s, a.shape, what)
    return vt.T @ ((u.T @ b).T / s).T


def ols_fit(design: DesignMatrix, y: np.ndarray) -> np.ndarray:
    """Ordinary least squares coefficients of ``y`` on ``design``.

    Parameters
    ----------
    design:
        Full-rank design with at least as many rows as columns.
    y:
        Response aligned with the design rows.

    Returns
    -------
    numpy.ndarray
        Coefficient vector of length ``design.n_cols``.
    """
    y = _as_float_vector(y, "y")
    if y.shape[0] != design.n_rows:
        raise ValueError("response length must match design rows")
    return least_squares(design.columns, y)


def scaled_residuals(design: DesignMatrix, y: np.ndarray) -> ScaledResiduals:
    """Project ``y`` off the design's column space and normalise.

    Raises
    ------
    DegenerateResidualsError
        If the projected residual norm is below ``1e-12``, i.e. the
        response is (numerically) inside the column space.
    RankDeficientError
        If the design is rank deficient.
    """
    y = _as_float_vector(y, "y")
    if y.shape[0] != design.n_rows:
        raise ValueError("response length must match design rows")
    basis = design.orthonormal_basis()
    residual = y - basis @ (basis.T @ y)
    norm = float(np.linalg.norm(residual))
    if norm < DEGENERATE_RESIDUAL_NORM:
        raise DegenerateResidualsError(
            f"residual norm {norm:.3e} below {DEGENERATE_RESIDUAL_NORM:g};"
            " response lies in the design span"
        )
    return ScaledResiduals(values=residual / norm, design=design)


def normalize_subset(subset: Iterable[int], d: int) -> tuple[int, ...]:
    """Validate and sort a predictor subset given as 0-based column indices."""
    items = tuple(int(j) for j in subset)
    if len(set(items)) != len(items):
        raise ValueError(f"subset {items} contains duplicate indices")
    for j in items:
        if not 0 <= j < d:
            raise ValueError(f"subset index {j} outside 0..{d - 1}")
    return tuple(sorted(items))


def build_lagged_design(
    data: Dataset, subset: Iterable[int], lags: int = 0
) -> tuple[DesignMatrix, np.ndarray]:
    """Assemble the lag-augmented design for one predictor subset.

    For lag order ``p`` the design covers time points ``p+1 .. n`` and its
    columns are, in order: an intercept, the contemporaneous predictors in
    ``subset``, then for each lag ``k = 1 .. p`` the lagged response
    followed by all ``d`` lagged predictors.  Column count is therefore
    ``1 + len(subset) + p * (d + 1)``.

    Returns the design together with the aligned response ``y[p:]``.

    Raises
    ------
    LagTooLargeError
        If ``lags > n - 2`` (fewer than two usable rows would remain).
    """
    subset = normalize_subset(subset, data.d)
    p = int(lags)
    if p < 0:
        raise ValueError("lags must be non-negative")
    n = data.n
    if p > n - 2:
        raise LagTooLargeError(f"lags={p} leaves fewer than 2 of {n} rows usable")
    n_eff = n - p
    blocks: list[np.ndarray] = [np.ones((n_eff, 1))]
    if subset:
        blocks.append(data.x[p:, list(subset)])
    for k in range(1, p + 1):
        blocks.append(data.y[p - k : n - k, None])
        blocks.append(data.x[p - k : n - k, :])
    columns = np.hstack(blocks)
    return DesignMatrix(columns=columns, has_intercept=True, row_offset=p), data.y[p:].copy()
