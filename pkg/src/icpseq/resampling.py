"""Exact resampling calibration of the invariance statistics.

Under the null hypothesis that a subset's linear model holds with
independent Gaussian noise throughout the series, the scaled residual
vector has a known, parameter-free distribution: project a standard
normal vector off the design and normalise.  The engine therefore draws
B such vectors, evaluates the statistic on each, and compares the
observed value against the resampled ones.  The p-value convention is

    p = (1 + #{b : |T_b| >= |T_obs|}) / (B + 1),

which is exactly valid at every B (ties count towards acceptance), and a
subset is rejected iff ``p <= alpha``.

Randomness is keyed by ``(seed, subset_id, resample_index)`` through
counter windows (see :mod:`icpseq.rng`), so p-values never depend on
evaluation order, batching, or which other subsets are tested.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from . import rng
from .regression import (
    Dataset,
    DesignMatrix,
    build_lagged_design,
    normalize_subset,
    scaled_residuals,
)
from .statistics import StatisticEvaluator, StatisticSpec

MIN_RESAMPLES = 19
DEGENERATE_DRAW_NORM = 1e-12
_MAX_REDRAWS = 64

NULL_QUANTILES = (0.5, 0.9, 0.95, 0.99)


@dataclass(frozen=True, eq=False)
class TestConfig:
    """Shared knobs of a single invariance test."""

    statistic: StatisticSpec
    resamples: int = 499
    alpha: float = 0.05
    lags: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.resamples) < MIN_RESAMPLES:
            raise ValueError(f"resamples must be >= {MIN_RESAMPLES}")
        if not 0.0 < float(self.alpha) < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if int(self.lags) < 0:
            raise ValueError("lags must be non-negative")
        object.__setattr__(self, "resamples", int(self.resamples))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "lags", int(self.lags))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class NullSummary:
    """Compact description of the resampled null values."""

    count: int
    minimum: float
    maximum: float
    quantiles: tuple[tuple[float, float], ...]

    @classmethod
    def from_values(cls, values: np.ndarray) -> "NullSummary":
        qs = tuple(
            (q, float(np.quantile(values, q))) for q in NULL_QUANTILES
        )
        return cls(
            count=int(values.size),
            minimum=float(values.min()),
            maximum=float(values.max()),
            quantiles=qs,
        )


@dataclass(frozen=True)
class TestOutcome:
    """Result of one resampling invariance test."""

    statistic_value: float
    p_value: float
    reject: bool
    alpha: float
    null_summary: NullSummary


@dataclass(frozen=True)
class DecoupledOutcome:
    """Result of the coefficient/variance split test.

    The two sub-tests run at level ``alpha / 2`` each with independent
    resampling substreams; the combined p-value is the Bonferroni
    combination ``min(1, 2 * min(p1, p2))``.
    """

    coefficient: TestOutcome
    variance: TestOutcome
    p_value: float
    reject: bool
    alpha: float

    @property
    def statistic_value(self) -> float:
        """Statistic of whichever sub-test drives the decision."""
        if self.coefficient.p_value <= self.variance.p_value:
            return self.coefficient.statistic_value
        return self.variance.statistic_value


def subset_id(subset: Iterable[int]) -> int:
    """Canonical integer identity of a predictor subset (bitmask)."""
    return sum(1 << int(j) for j in subset)


def null_residual_matrix(
    design: DesignMatrix, resamples: int, seed: int, key: tuple[int, ...] = ()
) -> np.ndarray:
    """Matrix of resampled scaled-residual columns under the null.

    Column ``b`` is a standard normal draw (counter window ``b``)
    projected off the design and normalised.  Degenerate draws (norm
    below 1e-12, probability zero in exact arithmetic) are replaced from
    fresh windows beyond the batch.
    """
    b = int(resamples)
    if b < 1:
        raise ValueError("need at least one resample")
    basis = design.orthonormal_basis()
    z = rng.normal_matrix(seed, key, design.n_rows, b)
    resid = z - basis @ (basis.T @ z)
    norms = np.linalg.norm(resid, axis=0)
    for col in np.nonzero(norms < DEGENERATE_DRAW_NORM)[0]:
        for retry in range(1, _MAX_REDRAWS + 1):
            draw = rng.normal_window(seed, key, design.n_rows, retry * b + int(col))
            fresh = draw - basis @ (basis.T @ draw)
            norm = float(np.linalg.norm(fresh))
            if norm >= DEGENERATE_DRAW_NORM:
                resid[:, col] = fresh
                norms[col] = norm
                break
        else:  # pragma: no cover - would need 64 degenerate draws in a row
            raise RuntimeError("could not obtain a non-degenerate resample")
    return resid / norms


def resample_null(
    design: DesignMatrix,
    statistic: StatisticSpec,
    resamples: int,
    seed: int,
    key: tuple[int, ...] = (),
) -> np.ndarray:
    """Absolute statistic values on ``resamples`` null residual vectors."""
    evaluator = StatisticEvaluator(statistic, design)
    matrix = null_residual_matrix(design, resamples, seed, key)
    return np.abs(evaluator.evaluate(matrix))


def pvalue_from_null(null_values: np.ndarray, observed: float) -> float:
    """Add-one exceedance p-value; ties count towards acceptance."""
    b = int(null_values.size)
    return float((1 + int(np.sum(null_values >= observed))) / (b + 1))


def _single_outcome(
    design: DesignMatrix,
    observed_residuals,
    spec: StatisticSpec,
    resamples: int,
    alpha: float,
    seed: int,
    key: tuple[int, ...],
) -> TestOutcome:
    evaluator = StatisticEvaluator(spec, design)
    t_obs = abs(evaluator.evaluate_one(observed_residuals))
    null_values = np.abs(
        evaluator.evaluate(null_residual_matrix(design, resamples, seed, key))
    )
    p = pvalue_from_null(null_values, t_obs)
    return TestOutcome(
        statistic_value=t_obs,
        p_value=p,
        reject=p <= alpha,
        alpha=float(alpha),
        null_summary=NullSummary.from_values(null_values),
    )


def test_invariance(data: Dataset, subset: Iterable[int], config: TestConfig) -> TestOutcome:
    """Test whether one predictor subset yields a time-invariant model.

    Builds the (optionally lagged) design for ``subset``, computes the
    observed scaled residuals and statistic, resamples the exact null,
    and returns the outcome at level ``config.alpha``.
    """
    subset = normalize_subset(subset, data.d)
    design, y = build_lagged_design(data, subset, config.lags)
    resid = scaled_residuals(design, y)
    return _single_outcome(
        design,
        resid,
        config.statistic,
        config.resamples,
        config.alpha,
        config.seed,
        key=(subset_id(subset),),
    )


def bonferroni_combined_pvalue(p1: float, p2: float) -> float:
    """Combined p-value of two sub-tests: ``min(1, 2 * min(p1, p2))``."""
    return min(1.0, 2.0 * min(float(p1), float(p2)))


def decoupled_test(
    data: Dataset, subset: Iterable[int], config: TestConfig
) -> DecoupledOutcome:
    """Coefficient (t1) and variance (t2) tests at half level each.

    Shares the design and observed residuals between the two sub-tests
    but gives each its own resampling substream, then combines the two
    p-values by Bonferroni.  The spec in ``config.statistic`` supplies
    the combiner and comparison set; its family field is ignored.
    """
    subset = normalize_subset(subset, data.d)
    design, y = build_lagged_design(data, subset, config.lags)
    resid = scaled_residuals(design, y)
    sid = subset_id(subset)
    half = config.alpha / 2.0
    outcomes = {}
    for tag, family in ((1, "t1"), (2, "t2")):
        spec = StatisticSpec(
            family=family,
            combiner=config.statistic.combiner,
            comparison=config.statistic.comparison,
        )
        outcomes[family] = _single_outcome(
            design, resid, spec, config.resamples, half, config.seed, key=(sid, tag)
        )
    combined = bonferroni_combined_pvalue(
        outcomes["t1"].p_value, outcomes["t2"].p_value
    )
    return DecoupledOutcome(
        coefficient=outcomes["t1"],
        variance=outcomes["t2"],
        p_value=combined,
        reject=combined <= config.alpha,
        alpha=config.alpha,
    )
