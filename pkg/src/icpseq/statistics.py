"""Invariance statistics computed on scaled residuals.

A statistic maps the scaled residual vector of one subset's regression to
a single number that should be small when the residuals look exchangeable
over time and large under parameter drift.  Two groups are implemented:

Block statistics (``t1`` .. ``t5``) compare environment pairs from a
:class:`~icpseq.environments.ComparisonSet` and aggregate the per-pair
values with ``max`` or ``sum`` of absolute values:

* ``t1`` - Euclidean distance between the coefficient vectors obtained by
  regressing the scaled residuals on the design within each environment.
* ``t2`` - ratio of the two environments' residual variance estimates,
  minus one.
* ``t3`` - prediction-error ratio: residuals of the left environment
  under the *right* environment's fit, normalised by the right
  environment's variance estimate, minus one.
* ``t4`` - difference of the environments' residual means.
* ``t5`` - ratio of the environments' residual energies, minus one.

Whole-path statistics need no environments:

* ``hsic`` - a kernel independence measure between the residuals and the
  normalised time index (biased V-statistic, Gaussian kernels).
* ``smooth-mean`` / ``smooth-var`` - mean squared fitted values of a
  Gaussian kernel regression of the residuals (or their squares, centred)
  on normalised time.

:class:`StatisticEvaluator` evaluates one statistic on many residual
vectors at once; the resampling engine feeds it whole null matrices.  The
single-shot functions in this module are the reference implementations
the evaluator is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .environments import ComparisonSet, Environment
from .exceptions import (
    DegenerateKernelError,
    EmptyComparisonSetError,
    RankDeficientError,
    ZeroDenominatorError,
)
from .regression import DesignMatrix, ScaledResiduals, least_squares

BLOCK_FAMILIES = ("t1", "t2", "t3", "t4", "t5")
PATH_FAMILIES = ("hsic", "smooth-mean", "smooth-var")
FAMILIES = BLOCK_FAMILIES + PATH_FAMILIES
COMBINERS = ("max", "sum")

#: Variance estimates at or below this raise ZeroDenominatorError.
ZERO_VARIANCE = 1e-14

#: Smoother bandwidth is ``c * n ** (-1/5)`` with this default constant.
SMOOTH_BANDWIDTH_SCALE = 1.0


@dataclass(frozen=True, eq=False)
class StatisticSpec:
    """Configuration of one statistic.

    ``combiner`` and ``comparison`` are required for (and restricted to)
    the block families; ``bandwidth`` is allowed only for the whole-path
    families, where ``None`` means median heuristic for ``hsic`` and the
    default scale constant for the smoothers.
    """

    family: str
    combiner: str | None = None
    comparison: ComparisonSet | None = None
    bandwidth: float | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown statistic family {self.family!r}")
        if self.family in BLOCK_FAMILIES:
            if self.combiner not in COMBINERS:
                raise ValueError(
                    f"block statistic {self.family!r} needs combiner in {COMBINERS}"
                )
            if self.comparison is None:
                raise ValueError(f"block statistic {self.family!r} needs a comparison set")
            if self.bandwidth is not None:
                raise ValueError("bandwidth applies only to hsic/smooth families")
        else:
            if self.combiner is not None or self.comparison is not None:
                raise ValueError(
                    f"{self.family!r} takes neither combiner nor comparison set"
                )
            if self.bandwidth is not None and not float(self.bandwidth) > 0:
                raise ValueError("bandwidth must be positive when given")


@dataclass(frozen=True, eq=False)
class PerEnvironmentFit:
    """Least-squares fit of scaled residuals within one environment."""

    gamma_hat: np.ndarray
    s2_hat: float
    size: int


def _region_positions(
    region: Environment | Sequence[int] | np.ndarray,
    n_total: int,
    row_offset: int,
) -> np.ndarray:
    """Map 1-based time indices onto 0-based rows of an offset design."""
    if isinstance(region, Environment):
        idx = region.indices
    else:
        idx = np.asarray(region, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("region must be a non-empty index vector")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("region indices must be strictly increasing")
    if idx[0] < 1 or idx[-1] > n_total:
        raise ValueError(f"region indices must lie in 1..{n_total}")
    pos = idx[idx > row_offset] - row_offset - 1
    if pos.size == 0:
        raise ValueError("region has no rows after the design's row offset")
    return pos


def _residual_vector(residuals: ScaledResiduals | np.ndarray) -> np.ndarray:
    if isinstance(residuals, ScaledResiduals):
        return residuals.values
    arr = np.asarray(residuals, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("residuals must be one-dimensional")
    return arr


def env_fit(
    residuals: ScaledResiduals | np.ndarray,
    design: DesignMatrix,
    env: Environment | Sequence[int] | np.ndarray,
) -> PerEnvironmentFit:
    """Regress the scaled residuals on the design within one environment.

    The variance estimate uses the environment size (not a degrees-of-
    freedom correction) as divisor; an environment with exactly as many
    rows as design columns therefore interpolates and yields zero.
    """
    r = _residual_vector(residuals)
    if r.shape[0] != design.n_rows:
        raise ValueError("residual length must match design rows")
    pos = _region_positions(env, design.n_total, design.row_offset)
    x = design.columns[pos]
    if pos.size < design.n_cols:
        raise RankDeficientError(
            f"environment with {pos.size} rows cannot fit {design.n_cols} columns"
        )
    gamma = least_squares(x, r[pos], what="environment design")
    resid = r[pos] - x @ gamma
    s2 = float(resid @ resid) / pos.size
    return PerEnvironmentFit(gamma_hat=gamma, s2_hat=s2, size=int(pos.size))


def t1_coef(fit_e: PerEnvironmentFit, fit_f: PerEnvironmentFit) -> float:
    """Euclidean distance between two environments' coefficient vectors."""
    if fit_e.gamma_hat.shape != fit_f.gamma_hat.shape:
        raise ValueError("fits come from designs of different widths")
    return float(np.linalg.norm(fit_e.gamma_hat - fit_f.gamma_hat))

def t2_var(fit_e: PerEnvironmentFit, fit_f: PerEnvironmentFit) -> float:
    """Variance ratio minus one; denominator is the second fit."""
    if fit_f.s2_hat <= ZERO_VARIANCE:
        raise ZeroDenominatorError(
            f"denominator variance {fit_f.s2_hat:.3e} <= {ZERO_VARIANCE:g}"
        )
    return float(fit_e.s2_hat / fit_f.s2_hat - 1.0)


def t3_chow(
    residuals: ScaledResiduals | np.ndarray,
    design: DesignMatrix,
    env_e: Environment | Sequence[int] | np.ndarray,
    fit_f: PerEnvironmentFit,
) -> float:
    """Cross-environment prediction error ratio minus one.

    Applies the right environment's coefficients to the left environment
    and compares the resulting mean squared residual with the right
    environment's variance estimate.
    """
    r = _residual_vector(residuals)
    if r.shape[0] != design.n_rows:
        raise ValueError("residual length must match design rows")
    if fit_f.s2_hat <= ZERO_VARIANCE:
        raise ZeroDenominatorError(
            f"denominator variance {fit_f.s2_hat:.3e} <= {ZERO_VARIANCE:g}"
        )
    pos = _region_positions(env_e, design.n_total, design.row_offset)
    diff = r[pos] - design.columns[pos] @ fit_f.gamma_hat
    return float((diff @ diff) / (fit_f.s2_hat * pos.size) - 1.0)


def _positions_pair(
    residuals: ScaledResiduals,
    env_e: Environment | Sequence[int] | np.ndarray,
    env_f: Environment | Sequence[int] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    design = residuals.design
    pos_e = _region_positions(env_e, design.n_total, design.row_offset)
    pos_f = _region_positions(env_f, design.n_total, design.row_offset)
    return residuals.values, pos_e, pos_f


def t4_mean(
    residuals: ScaledResiduals,
    env_e: Environment | Sequence[int] | np.ndarray,
    env_f: Environment | Sequence[int] | np.ndarray,
) -> float:
    """Difference of residual means between two environments."""
    r, pos_e, pos_f = _positions_pair(residuals, env_e, env_f)
    return float(np.mean(r[pos_e]) - np.mean(r[pos_f]))


def t5_var(
    residuals: ScaledResiduals,
    env_e: Environment | Sequence[int] | np.ndarray,
    env_f: Environment | Sequence[int] | np.ndarray,
) -> float:
    """Residual energy ratio minus one; denominator is the second block."""
    r, pos_e, pos_f = _positions_pair(residuals, env_e, env_f)
    denom = float(r[pos_f] @ r[pos_f])
    if denom <= ZERO_VARIANCE:
        raise ZeroDenominatorError(f"denominator energy {denom:.3e} <= {ZERO_VARIANCE:g}")
    return float((r[pos_e] @ r[pos_e]) / denom - 1.0)


def combine(values: Sequence[float] | np.ndarray, combiner: str) -> float:
    """Aggregate per-pair statistic values by max or sum of absolutes."""
    if combiner not in COMBINERS:
        raise ValueError(f"combiner must be one of {COMBINERS}")
    arr = np.abs(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise EmptyComparisonSetError("no per-pair values to combine")
    return float(arr.max() if combiner == "max" else arr.sum())


# ---------------------------------------------------------------------------
# whole-path statistics


def _median_positive(values: np.ndarray, what: str) -> float:
    mask = values > 0.0
    if not np.any(mask):
        raise DegenerateKernelError(f"all pairwise {what} distances are zero")
    return float(np.median(values[mask]))


def _normalized_times(n_eff: int, row_offset: int, n_total: int) -> np.ndarray:
    return (np.arange(n_eff, dtype=np.float64) + row_offset + 1.0) / n_total


def _time_context(residuals: ScaledResiduals | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Residual values plus their normalised time grid."""
    if isinstance(residuals, ScaledResiduals):
        r = residuals.values
        design = residuals.design
        t = _normalized_times(r.shape[0], design.row_offset, design.n_total)
    else:
        r = _residual_vector(residuals)
        t = _normalized_times(r.shape[0], 0, r.shape[0])
    return r, t


def _centered_gram(dist2: np.ndarray, sigma: float) -> np.ndarray:
    k = np.exp(-dist2 / (2.0 * sigma * sigma))
    row = k.mean(axis=1, keepdims=True)
    col = k.mean(axis=0, keepdims=True)
    return k - row - col + k.mean()


def hsic_time(
    residuals: ScaledResiduals | np.ndarray, bandwidth: float | None = None
) -> float:
    """Kernel dependence between residual values and normalised time.

    Biased V-statistic with Gaussian kernels on both coordinates.  With
    ``bandwidth=None`` each kernel uses the median of its positive
    pairwise distances; a fixed positive value is applied to both.
    """
    r, t = _time_context(residuals)
    n = r.shape[0]
    if n < 4:
        raise ValueError("hsic needs at least 4 residuals")
    dr = np.abs(r[:, None] - r[None, :])
    dt = np.abs(t[:, None] - t[None, :])
    if bandwidth is None:
        sigma_r = _median_positive(dr, "residual")
        sigma_t = _median_positive(dt, "time")
    else:
        sigma_r = sigma_t = float(bandwidth)
        if sigma_r <= 0:
            raise ValueError("bandwidth must be positive")
    k = np.exp(-(dr * dr) / (2.0 * sigma_r * sigma_r))
    m = _centered_gram(dt * dt, sigma_t)
    return float(np.sum(k * m) / (n * n))


SMOOTH_MOMENTS = ("first", "second")


def _smoother_weights(t: np.ndarray, scale: float) -> np.ndarray:
    n = t.shape[0]
    h = scale * n ** (-0.2)
    w = np.exp(-((t[:, None] - t[None, :]) ** 2) / (2.0 * h * h))
    return w / w.sum(axis=1, keepdims=True)


def smooth_shift(
    residuals: ScaledResiduals | np.ndarray,
    moment: str = "first",
    bandwidth: float | None = None,
) -> float:
    """Mean squared kernel-smoothed residual path.

    ``moment="first"`` smooths the residuals themselves (drifting mean);
    ``moment="second"`` smooths the centred squared residuals (drifting
    variance).  ``bandwidth`` scales the rate-optimal width
    ``c * n**(-1/5)``; ``None`` uses ``c = 1``.
    """
    if moment not in SMOOTH_MOMENTS:
        raise ValueError(f"moment must be one of {SMOOTH_MOMENTS}")
    r, t = _time_context(residuals)
    if r.shape[0] < 8:
        raise ValueError("smoother needs at least 8 residuals")
    scale = SMOOTH_BANDWIDTH_SCALE if bandwidth is None else float(bandwidth)
    if scale <= 0:
        raise ValueError("bandwidth must be positive")
    weights = _smoother_weights(t, scale)
    z = r if moment == "first" else r * r - np.mean(r * r)
    fitted = weights @ z
    return float(np.mean(fitted * fitted))


# ---------------------------------------------------------------------------
# batched evaluation


class _RegionState:
    """Cached per-region quantities for block statistics."""

    __slots__ = ("positions", "x", "ut", "gamma_from", "size")

    def __init__(
        self,
        design: DesignMatrix,
        indices: np.ndarray,
        need_fit: bool,
        need_x: bool,
    ) -> None:
        self.positions = _region_positions(indices, design.n_total, design.row_offset)
        self.size = int(self.positions.size)
        self.x = design.columns[self.positions] if (need_fit or need_x) else None
        self.ut = None
        self.gamma_from = None
        if need_fit:
            if self.size < design.n_cols:
                raise RankDeficientError(
                    f"environment with {self.size} rows cannot fit"
                    f" {design.n_cols} columns"
                )
            u, s, vt = np.linalg.svd(self.x, full_matrices=False)
            tol = float(s[0]) * max(self.x.shape) * float(np.finfo(np.float64).eps)
            if int(np.sum(s > tol)) < design.n_cols:
                raise RankDeficientError("environment design is rank deficient")
            self.ut = np.ascontiguousarray(u.T)
            self.gamma_from = vt.T / s


class StatisticEvaluator:
    """Evaluate one statistic on a matrix of residual columns.

    Built once per (statistic, design) pair; all data-independent work
    (environment slicing, per-environment orthogonal factorisations,
    kernel matrices on the time grid) happens at construction, so that
    evaluating B resampled residual vectors is a handful of matrix
    products.
    """

    def __init__(self, spec: StatisticSpec, design: DesignMatrix) -> None:
        self.spec = spec
        self.design = design
        family = spec.family
        if family in BLOCK_FAMILIES:
            comparison = spec.comparison
            assert comparison is not None
            if comparison.n != design.n_total:
                raise ValueError(
                    f"comparison set over n={comparison.n} does not match"
                    f" design covering n={design.n_total}"
                )
            need_fit = family in ("t1", "t2", "t3")
            need_x = family == "t3"
            self._regions = [
                _RegionState(design, idx, need_fit, need_x)
                for idx in comparison.regions
            ]
            self._pairs = comparison.pair_indices
        elif family == "hsic":
            t = _normalized_times(design.n_rows, design.row_offset, design.n_total)
            dt = np.abs(t[:, None] - t[None, :])
            if spec.bandwidth is None:
                sigma_t = _median_positive(dt, "time")
            else:
                sigma_t = float(spec.bandwidth)
            self._hsic_m = _centered_gram(dt * dt, sigma_t)
        else:
            t = _normalized_times(design.n_rows, design.row_offset, design.n_total)
            if design.n_rows < 8:
                raise ValueError("smoother needs at least 8 residuals")
            scale = SMOOTH_BANDWIDTH_SCALE if spec.bandwidth is None else float(spec.bandwidth)
            self._smooth_w = _smoother_weights(t, scale)

    # -- public API --------------------------------------------------------

    def evaluate(self, residual_matrix: np.ndarray) -> np.ndarray:
        """Statistic value for each column of ``residual_matrix``."""
        rm = np.asarray(residual_matrix, dtype=np.float64)
        if rm.ndim != 2 or rm.shape[0] != self.design.n_rows:
            raise ValueError(
                f"expected ({self.design.n_rows}, B) residual matrix, got {rm.shape}"
            )
        family = self.spec.family
        if family in BLOCK_FAMILIES:
            return self._evaluate_block(rm)
        if family == "hsic":
            return self._evaluate_hsic(rm)
        return self._evaluate_smooth(rm)

    def evaluate_one(self, residuals: ScaledResiduals | np.ndarray) -> float:
        r = _residual_vector(residuals)
        return float(self.evaluate(r[:, None])[0])

    # -- block families ----------------------------------------------------

    def _fits(self, rm: np.ndarray, needed: set[int]):
        gammas: dict[int, np.ndarray] = {}
        s2s: dict[int, np.ndarray] = {}
        for i in needed:
            st = self._regions[i]
            rh = rm[st.positions]
            c = st.ut @ rh
            gammas[i] = st.gamma_from @ c
            ss = np.einsum("ij,ij->j", rh, rh) - np.einsum("ij,ij->j", c, c)
            s2s[i] = np.maximum(ss, 0.0) / st.size
        return gammas, s2s

    def _evaluate_block(self, rm: np.ndarray) -> np.ndarray:
        family = self.spec.family
        pairs = self._pairs
        rows: list[np.ndarray] = []
        if family in ("t1", "t2", "t3"):
            needed = {i for pair in pairs for i in pair} if family != "t3" else (
                {i for i, _ in pairs} | {j for _, j in pairs}
            )
            gammas, s2s = self._fits(rm, needed)
            for i, j in pairs:
                if family == "t1":
                    diff = gammas[i] - gammas[j]
                    rows.append(np.sqrt(np.einsum("ij,ij->j", diff, diff)))
                elif family == "t2":
                    denom = s2s[j]
                    if np.any(denom <= ZERO_VARIANCE):
                        raise ZeroDenominatorError(
                            "an environment variance estimate is (near) zero"
                        )
                    rows.append(s2s[i] / denom - 1.0)
                else:
                    st_e = self._regions[i]
                    denom = s2s[j]
                    if np.any(denom <= ZERO_VARIANCE):
                        raise ZeroDenominatorError(
                            "an environment variance estimate is (near) zero"
                        )
                    diff = rm[st_e.positions] - st_e.x @ gammas[j]
                    num = np.einsum("ij,ij->j", diff, diff)
                    rows.append(num / (denom * st_e.size) - 1.0)
        elif family == "t4":
            means = {
                i: rm[self._regions[i].positions].mean(axis=0)
                for pair in pairs
                for i in pair
            }
            rows = [means[i] - means[j] for i, j in pairs]
        else:  # t5
            energies = {
                i: np.einsum(
                    "ij,ij->j", rm[self._regions[i].positions], rm[self._regions[i].positions]
                )
                for pair in pairs
                for i in pair
            }
            for i, j in pairs:
                denom = energies[j]
                if np.any(denom <= ZERO_VARIANCE):
                    raise ZeroDenominatorError("an environment energy is (near) zero")
                rows.append(energies[i] / denom - 1.0)
        stacked = np.abs(np.vstack(rows))
        if self.spec.combiner == "max":
            return stacked.max(axis=0)
        return stacked.sum(axis=0)

    # -- whole-path families -------------------------------------------------

    def _evaluate_hsic(self, rm: np.ndarray) -> np.ndarray:
        n, b = rm.shape
        if n < 4:
            raise ValueError("hsic needs at least 4 residuals")
        out = np.empty(b)
        m = self._hsic_m
        fixed = self.spec.bandwidth
        for col in range(b):
            r = rm[:, col]
            dr = np.abs(r[:, None] - r[None, :])
            sigma = _median_positive(dr, "residual") if fixed is None else float(fixed)
            k = np.exp(-(dr * dr) / (2.0 * sigma * sigma))
            out[col] = np.sum(k * m) / (n * n)
        return out

    def _evaluate_smooth(self, rm: np.ndarray) -> np.ndarray:
        if self.spec.family == "smooth-mean":
            z = rm
        else:
            sq = rm * rm
            z = sq - sq.mean(axis=0, keepdims=True)
        fitted = self._smooth_w @ z
        return np.einsum("ij,ij->j", fitted, fitted) / rm.shape[0]
