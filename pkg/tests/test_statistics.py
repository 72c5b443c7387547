"""Scalar test statistics on scaled residuals.

Block statistics are checked against hand arithmetic and against direct
per-pair recomputation; the whole-path statistics against explicit
double-sum and kernel-average oracles.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from icpseq import (
    Dataset,
    DegenerateKernelError,
    DesignMatrix,
    EmptyComparisonSetError,
    Environment,
    PerEnvironmentFit,
    RankDeficientError,
    ScaledResiduals,
    StatisticEvaluator,
    StatisticSpec,
    ZeroDenominatorError,
    build_lagged_design,
    changepoint_environments,
    combine,
    comparison_set,
    env_fit,
    grid_environments,
    hsic_time,
    scaled_residuals,
    smooth_shift,
    t1_coef,
    t2_var,
    t3_chow,
    t4_mean,
    t5_var,
)


def _fit(gamma, s2, size=10):
    return PerEnvironmentFit(gamma_hat=np.asarray(gamma, dtype=float), s2_hat=s2, size=size)


def _residual_setup(seed=0, n=40, d=2):
    gen = np.random.default_rng(seed)
    data = Dataset(y=gen.standard_normal(n), x=gen.standard_normal((n, d)))
    design, y = build_lagged_design(data, tuple(range(d)), lags=0)
    return design, scaled_residuals(design, y)


# -- per-environment fits -----------------------------------------------------


def test_env_fit_full_range_is_degenerate_direction():
    design, resid = _residual_setup(seed=1, n=36)
    fit = env_fit(resid, design, Environment(1, 36))
    assert np.allclose(fit.gamma_hat, 0.0, atol=1e-10)
    assert fit.s2_hat == pytest.approx(1.0 / 36.0, abs=1e-12)
    assert fit.size == 36


def test_env_fit_saturated_environment():
    gen = np.random.default_rng(2)
    design = DesignMatrix(
        columns=np.hstack([np.ones((12, 1)), gen.standard_normal((12, 2))])
    )
    r = gen.standard_normal(12)
    fit = env_fit(r, design, Environment(1, 3))
    assert fit.s2_hat == pytest.approx(0.0, abs=1e-16)
    assert fit.size == 3


def test_env_fit_undersized_environment():
    design, resid = _residual_setup(seed=3, n=30)
    with pytest.raises(RankDeficientError):
        env_fit(resid, design, Environment(1, 2))


def test_env_fit_respects_row_offset():
    gen = np.random.default_rng(4)
    data = Dataset(y=gen.standard_normal(20), x=gen.standard_normal((20, 1)))
    design, y = build_lagged_design(data, (0,), lags=2)
    resid = scaled_residuals(design, y)
    # Times 1..2 have no design rows; the block {1..10} keeps eight.
    fit = env_fit(resid, design, Environment(1, 10))
    assert fit.size == 8
    oracle = np.linalg.lstsq(design.columns[:8], resid.values[:8], rcond=None)[0]
    assert np.allclose(fit.gamma_hat, oracle, atol=1e-10)


# -- pairwise statistics -------------------------------------------------------


def test_t1_examples():
    assert t1_coef(_fit([1.0, 0.0], 1.0), _fit([1.0, 0.0], 2.0)) == 0.0
    value = t1_coef(_fit([1.0, 0.0], 1.0), _fit([0.0, 1.0], 1.0))
    assert value == pytest.approx(math.sqrt(2.0), abs=1e-15)
    a, b = _fit([3.0, -1.0], 1.0), _fit([0.5, 2.0], 1.0)
    assert t1_coef(a, b) == t1_coef(b, a)


def test_t2_examples():
    assert t2_var(_fit([0.0], 0.3), _fit([0.0], 0.3)) == 0.0
    assert t2_var(_fit([0.0], 0.6), _fit([0.0], 0.3)) == pytest.approx(1.0)
    a = t2_var(_fit([0.0], 0.7), _fit([0.0], 0.2))
    b = t2_var(_fit([0.0], 0.2), _fit([0.0], 0.7))
    assert (1.0 + a) * (1.0 + b) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ZeroDenominatorError):
        t2_var(_fit([0.0], 0.3), _fit([0.0], 0.0))


def test_t3_self_comparison_is_zero():
    design, resid = _residual_setup(seed=5)
    env = Environment(3, 27)
    fit = env_fit(resid, design, env)
    assert t3_chow(resid, design, env, fit) == pytest.approx(0.0, abs=1e-12)


def test_t3_matches_noise_expansion():
    """Chow ratio equals its expansion in the generating noise.

    With blockwise-constant true coefficients, the cross-environment
    prediction error can be written purely in terms of the planted noise
    and the per-block response fits; the two routes must agree.
    """
    for seed in range(5):
        gen = np.random.default_rng(seed)
        n, half = 60, 30
        x = gen.standard_normal((n, 1))
        eps = gen.standard_normal(n) * 0.7
        beta = np.where(np.arange(n) < half, 1.5, -0.5)
        mu = np.where(np.arange(n) < half, 0.2, 1.0)
        y = mu + beta * x[:, 0] + eps

        data = Dataset(y=y, x=x)
        design, yy = build_lagged_design(data, (0,), lags=0)
        resid = scaled_residuals(design, yy)
        e1, e2 = Environment(1, half), Environment(half + 1, n)
        fit2 = env_fit(resid, design, e2)
        value = t3_chow(resid, design, e1, fit2)

        cols = design.columns
        rows1, rows2 = slice(0, half), slice(half, n)
        beta_hat2 = np.linalg.lstsq(cols[rows2], y[rows2], rcond=None)[0]
        true1 = np.array([mu[0], beta[0]])
        true2 = np.array([mu[-1], beta[-1]])
        num = eps[rows1] + cols[rows1] @ (true1 - beta_hat2)
        den = eps[rows2] + cols[rows2] @ (true2 - beta_hat2)
        oracle = (num @ num / half) / (den @ den / half) - 1.0
        assert value == pytest.approx(oracle, abs=1e-8)


def test_t3_scale_invariance():
    design, resid = _residual_setup(seed=6)
    r = resid.values
    e1, e2 = Environment(1, 20), Environment(21, 40)
    base = t3_chow(r, design, e1, env_fit(r, design, e2))
    scaled = t3_chow(2.5 * r, design, e1, env_fit(2.5 * r, design, e2))
    assert scaled == pytest.approx(base, rel=1e-12)


def _hand_residuals():
    # Unit-norm vector orthogonal to the single design column.
    values = np.array([0.6, 0.0, 0.0, 0.8])
    design = DesignMatrix(
        columns=np.array([[-0.8], [0.0], [0.0], [0.6]]), has_intercept=False
    )
    return ScaledResiduals(values=values, design=design)


def test_t4_t5_hand_example():
    resid = _hand_residuals()
    e, f = Environment(1, 2), Environment(3, 4)
    assert t4_mean(resid, e, f) == pytest.approx(-0.1, abs=1e-15)
    assert t5_var(resid, e, f) == pytest.approx(-0.4375, abs=1e-15)


def test_t4_antisymmetry_and_t5_identity():
    resid = _hand_residuals()
    e, f = Environment(1, 2), Environment(3, 4)
    assert t4_mean(resid, e, f) == -t4_mean(resid, f, e)
    assert t5_var(resid, e, e) == 0.0
    assert t4_mean(resid, e, e) == 0.0


def test_t5_zero_denominator():
    resid = _hand_residuals()
    with pytest.raises(ZeroDenominatorError):
        t5_var(resid, Environment(1, 2), Environment(2, 3))


# -- combiners ------------------------------------------------------------------


def test_combine_examples():
    assert combine([-3.0, 2.0], "max") == 3.0
    assert combine([-3.0, 2.0], "sum") == 5.0
    assert combine([-1.5], "max") == combine([-1.5], "sum") == 1.5
    with pytest.raises(EmptyComparisonSetError):
        combine([], "max")
    with pytest.raises(ValueError):
        combine([1.0], "median")


# -- hsic -----------------------------------------------------------------------


def test_hsic_constant_residuals_fixed_bandwidth():
    assert hsic_time(np.full(8, 0.3), bandwidth=1.0) == pytest.approx(0.0, abs=1e-14)


def test_hsic_constant_residuals_median_heuristic_degenerates():
    with pytest.raises(DegenerateKernelError):
        hsic_time(np.full(8, 0.3))


def test_hsic_nonnegative():
    gen = np.random.default_rng(7)
    for _ in range(10):
        assert hsic_time(gen.standard_normal(15)) >= 0.0


def test_hsic_double_sum_oracle():
    r = np.array([0.1, -0.4, 0.25, 0.05])
    n = 4
    t = (np.arange(n) + 1.0) / n

    def k(a, b):
        return math.exp(-((a - b) ** 2) / 2.0)

    kk = np.array([[k(r[i], r[j]) for j in range(n)] for i in range(n)])
    ll = np.array([[k(t[i], t[j]) for j in range(n)] for i in range(n)])
    term1 = sum(kk[i, j] * ll[i, j] for i in range(n) for j in range(n)) / n**2
    term2 = kk.sum() * ll.sum() / n**4
    term3 = 2.0 * sum(kk[i].sum() * ll[i].sum() for i in range(n)) / n**3
    oracle = term1 + term2 - term3
    assert hsic_time(r, bandwidth=1.0) == pytest.approx(oracle, abs=1e-10)


def test_hsic_detects_a_trend():
    n = 60
    drift = np.linspace(-1.0, 1.0, n)
    noise = np.random.default_rng(8).standard_normal(n) * 0.05
    assert hsic_time(drift + noise) > 10.0 * hsic_time(noise)


def test_hsic_needs_four_points():
    with pytest.raises(ValueError):
        hsic_time(np.array([0.1, 0.2, 0.3]))


# -- kernel smoother --------------------------------------------------------------


def test_smooth_shift_nonnegative_and_zero_on_zero():
    gen = np.random.default_rng(9)
    assert smooth_shift(gen.standard_normal(20)) >= 0.0
    assert smooth_shift(np.zeros(20)) == 0.0


def test_smooth_shift_flat_limit():
    # A zero-sum vector under an enormous bandwidth smooths to the global
    # mean, which is zero.
    r = np.array([1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 0.25, -0.25])
    assert smooth_shift(r, bandwidth=1e9) == pytest.approx(0.0, abs=1e-16)


def test_smooth_shift_kernel_oracle():
    gen = np.random.default_rng(10)
    r = gen.standard_normal(10)
    n = 10
    t = (np.arange(n) + 1.0) / n
    h = 0.7 * n ** (-0.2)
    w = np.exp(-((t[:, None] - t[None, :]) ** 2) / (2.0 * h * h))
    w = w / w.sum(axis=1, keepdims=True)
    first = np.mean((w @ r) ** 2)
    centered = r * r - np.mean(r * r)
    second = np.mean((w @ centered) ** 2)
    assert smooth_shift(r, "first", bandwidth=0.7) == pytest.approx(first, abs=1e-12)
    assert smooth_shift(r, "second", bandwidth=0.7) == pytest.approx(second, abs=1e-12)


def test_smooth_shift_validation():
    with pytest.raises(ValueError):
        smooth_shift(np.ones(7))
    with pytest.raises(ValueError):
        smooth_shift(np.ones(10), moment="third")
    with pytest.raises(ValueError):
        smooth_shift(np.ones(10), bandwidth=-1.0)


def test_smooth_shift_detects_mean_drift():
    n = 80
    drift = np.linspace(-0.3, 0.3, n)
    noise = np.random.default_rng(11).standard_normal(n) * 0.05
    assert smooth_shift(drift + noise) > 5.0 * smooth_shift(noise)


# -- statistic spec ---------------------------------------------------------------


def test_statistic_spec_validation():
    cs = comparison_set(changepoint_environments(20, (10,)), kind="f1", min_size=2)
    StatisticSpec("t1", combiner="max", comparison=cs)
    with pytest.raises(ValueError):
        StatisticSpec("t1")
    with pytest.raises(ValueError):
        StatisticSpec("t1", combiner="max", comparison=cs, bandwidth=1.0)
    with pytest.raises(ValueError):
        StatisticSpec("hsic", combiner="max")
    with pytest.raises(ValueError):
        StatisticSpec("hsic", bandwidth=0.0)
    with pytest.raises(ValueError):
        StatisticSpec("t9")


# -- batched evaluator --------------------------------------------------------------


def _direct_block_value(family, combiner, resid_vector, design, cs):
    values = []
    for e, f in cs.pairs:
        if family in ("t1", "t2"):
            fe = env_fit(resid_vector, design, e)
            ff = env_fit(resid_vector, design, f)
            values.append(t1_coef(fe, ff) if family == "t1" else t2_var(fe, ff))
        elif family == "t3":
            values.append(t3_chow(resid_vector, design, e, env_fit(resid_vector, design, f)))
        else:
            wrapped = ScaledResiduals(values=resid_vector, design=design)
            values.append(
                t4_mean(wrapped, e, f) if family == "t4" else t5_var(wrapped, e, f)
            )
    return combine(values, combiner)


@pytest.mark.parametrize("family", ["t1", "t2", "t3", "t4", "t5"])
@pytest.mark.parametrize("combiner", ["max", "sum"])
def test_evaluator_matches_direct_block_computation(family, combiner):
    design, resid = _residual_setup(seed=12, n=50, d=2)
    cs = comparison_set(grid_environments(50, (15, 30)), kind="f2", min_size=8)
    spec = StatisticSpec(family, combiner=combiner, comparison=cs)
    evaluator = StatisticEvaluator(spec, design)

    gen = np.random.default_rng(13)
    matrix = np.column_stack(
        [resid.values] + [_unit_residual(design, gen) for _ in range(3)]
    )
    batched = evaluator.evaluate(matrix)
    for col in range(matrix.shape[1]):
        direct = _direct_block_value(family, combiner, matrix[:, col], design, cs)
        assert batched[col] == pytest.approx(direct, abs=1e-10)
        assert evaluator.evaluate_one(matrix[:, col]) == pytest.approx(direct, abs=1e-10)


def _unit_residual(design, gen):
    z = gen.standard_normal(design.n_rows)
    basis = design.orthonormal_basis()
    z = z - basis @ (basis.T @ z)
    return z / np.linalg.norm(z)


@pytest.mark.parametrize("family", ["hsic", "smooth-mean", "smooth-var"])
def test_evaluator_matches_path_functions(family):
    design, resid = _residual_setup(seed=14, n=30, d=1)
    spec = StatisticSpec(family, bandwidth=0.9)
    evaluator = StatisticEvaluator(spec, design)
    value = evaluator.evaluate_one(resid)
    if family == "hsic":
        direct = hsic_time(resid, bandwidth=0.9)
    else:
        moment = "first" if family == "smooth-mean" else "second"
        direct = smooth_shift(resid, moment, bandwidth=0.9)
    assert value == pytest.approx(direct, abs=1e-12)


def test_evaluator_checks_design_alignment():
    design, _ = _residual_setup(seed=15, n=30)
    cs = comparison_set(grid_environments(40, (20,)), kind="f1", min_size=5)
    spec = StatisticSpec("t1", combiner="max", comparison=cs)
    with pytest.raises(ValueError):
        StatisticEvaluator(spec, design)


def test_statistics_depend_on_y_only_through_residual_direction():
    """Any statistic is unchanged by in-span shifts and residual rescaling."""
    gen = np.random.default_rng(16)
    data = Dataset(y=gen.standard_normal(40), x=gen.standard_normal((40, 2)))
    design, y = build_lagged_design(data, (0, 1), lags=0)
    beta_hat = np.linalg.lstsq(design.columns, y, rcond=None)[0]
    y2 = design.columns @ np.array([4.0, -1.0, 2.0]) + 3.0 * (y - design.columns @ beta_hat)

    r1 = scaled_residuals(design, y)
    r2 = scaled_residuals(design, y2)
    cs = comparison_set(grid_environments(40, (13, 26)), kind="f2", min_size=8)
    for family in ("t1", "t2", "t3", "t4", "t5"):
        spec = StatisticSpec(family, combiner="sum", comparison=cs)
        ev = StatisticEvaluator(spec, design)
        assert ev.evaluate_one(r1) == pytest.approx(ev.evaluate_one(r2), abs=1e-10)
    for family in ("hsic", "smooth-mean", "smooth-var"):
        ev = StatisticEvaluator(StatisticSpec(family), design)
        assert ev.evaluate_one(r1) == pytest.approx(ev.evaluate_one(r2), abs=1e-10)
