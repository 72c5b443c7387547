"""Synthetic data generators with known ground truth.

Each generator returns a :class:`LabeledDataset`: the observable data
plus whatever the generating process knows (true parent columns, change
points, drawn parameters, and for some generators the noise draws, which
tests use to verify the planted equations exactly).

All generators are deterministic functions of their seed; see
:mod:`icpseq.rng`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import rng
from .regression import Dataset

SCM_KINDS = (
    "changepoint_linear",
    "scm_three_env",
    "var_shock",
    "var_outlier",
    "sign_flip",
)

#: Baseline noise variances for the change-point generator, per kind of
#: planted gap.  The gaps shrink like log(n)/sqrt(n) or log(n)/n**0.25,
#: so the baseline sets where they sit relative to each test's noise
#: floor.  Coefficient-difference tests resolve a coefficient gap d at
#: roughly d/(40*sigma) standard errors, hence sigma = 0.1 places the
#: slower-shrinking gap right on the detectability boundary where the
#: coefficient-based and residual-based tests separate.  The variance
#: gap is additive, so a baseline of 0.5 keeps the variance ratio large
#: enough to climb with n without saturating both tests at the smallest
#: n.
CHANGEPOINT_COEF_NOISE_VAR = 0.01
CHANGEPOINT_VAR_NOISE_VAR = 0.5

_VAR_BURN_IN = 100


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """A dataset plus the ground truth of its generating process."""

    dataset: Dataset
    true_parents: tuple[int, ...]
    true_change_points: tuple[int, ...]
    params: dict[str, Any] = field(default_factory=dict)
    noises: np.ndarray | None = None

    @property
    def parent_names(self) -> tuple[str, ...]:
        return tuple(self.dataset.column_names[j] for j in self.true_parents)


@dataclass(frozen=True)
class ScmSpec:
    """Declarative description of one simulated dataset."""

    kind: str
    n: int
    seed: int = 0
    parameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in SCM_KINDS:
            raise ValueError(f"kind must be one of {SCM_KINDS}")
        if int(self.n) < 4:
            raise ValueError("n must be at least 4")


def generate(spec: ScmSpec) -> LabeledDataset:
    """Dispatch a :class:`ScmSpec` to the matching generator."""
    p = spec.parameters
    if spec.kind == "changepoint_linear":
        return gen_changepoint_alternative(spec.n, p.get("alternative", 1), spec.seed)
    if spec.kind == "scm_three_env":
        return gen_scm_three_env(spec.n, spec.seed, change_points=p.get("change_points"))
    if spec.kind == "var_shock":
        return gen_var_shock(spec.n, p.get("shock_strength", 0.0), spec.seed)
    if spec.kind == "var_outlier":
        return gen_var_outlier(spec.n, p.get("outlier_value", 0.0), spec.seed)
    return gen_sign_flip_example(spec.n, spec.seed)


def gen_changepoint_alternative(n: int, alternative: int, seed: int) -> LabeledDataset:
    """Univariate regression with one parameter change at n/2.

    The second half is the baseline (coefficient 1); the first half
    deviates by the planted gap:

    * alternative 1: coefficient gap ``log(n) / (20 * sqrt(n))``
    * alternative 2: coefficient gap ``log(n) / (20 * n**0.25)``
    * alternative 3: noise-variance gap ``log(n) / sqrt(n)``

    Predictors are standard normal.  The baseline noise variance is
    :data:`CHANGEPOINT_COEF_NOISE_VAR` for alternatives 1 and 2 and
    :data:`CHANGEPOINT_VAR_NOISE_VAR` for alternative 3.
    """
    n = int(n)
    if n < 20 or n % 2:
        raise ValueError("n must be an even integer >= 20")
    alternative = int(alternative)
    if alternative not in (1, 2, 3):
        raise ValueError("alternative must be 1, 2 or 3")
    beta_second = 1.0
    log_n = math.log(n)
    if alternative == 1:
        var_second = CHANGEPOINT_COEF_NOISE_VAR
        beta_first = beta_second + log_n / (20.0 * math.sqrt(n))
        var_first = var_second
    elif alternative == 2:
        var_second = CHANGEPOINT_COEF_NOISE_VAR
        beta_first = beta_second + log_n / (20.0 * n**0.25)
        var_first = var_second
    else:
        var_second = CHANGEPOINT_VAR_NOISE_VAR
        beta_first = beta_second
        var_first = var_second + log_n / math.sqrt(n)

    gen = rng.stream(seed, 1)
    half = n // 2
    x = gen.standard_normal(n)
    noise = gen.standard_normal(n)
    noise[:half] *= math.sqrt(var_first)
    noise[half:] *= math.sqrt(var_second)
    beta = np.where(np.arange(n) < half, beta_first, beta_second)
    y = beta * x + noise
    return LabeledDataset(
        dataset=Dataset(y=y, x=x[:, None], column_names=("X1",)),
        true_parents=(0,),
        true_change_points=(half,),
        params={
            "alternative": alternative,
            "beta_first": beta_first,
            "beta_second": beta_second,
            "var_first": var_first,
            "var_second": var_second,
        },
        noises=noise[:, None],
    )


def gen_scm_three_env(
    n: int, seed: int, change_points: tuple[int, int] | None = None
) -> LabeledDataset:
    """Three-environment structural model with response parents X1, X2.

    Observationally: ``X1 <- N1``, ``X2 <- b1*X1 + N2``,
    ``Y <- b2*X1 + b3*X2 + N3``, ``X3 <- b4*Y + N4`` with Gaussian noises
    ``N_j ~ N(mu_j, s2_j)``, ``b_j ~ U[0.5, 1.5]``, ``s2_j ~ U[0.1, 0.3]``,
    ``mu_j ~ U[0, 0.3]``.  The second environment replaces X2's noise by
    one with mean ``U[1, 1.5]`` and variance ``U[1, 1.5]``; the third cuts
    X3 loose from Y entirely: ``X3 = N~`` with mean ``U[-1, -0.5]`` and
    the third structural noise variance.  The response equation never
    changes, so the invariant predictor set is ``{X1, X2}``.

    Change points default to a uniform draw without replacement from the
    central 80% of the series; pass an explicit pair to fix them.
    """
    n = int(n)
    if n < 30:
        raise ValueError("n must be at least 30")
    gen = rng.stream(seed, 2)
    beta = gen.uniform(0.5, 1.5, size=4)
    s2 = gen.uniform(0.1, 0.3, size=4)
    mu = gen.uniform(0.0, 0.3, size=4)
    m2 = gen.uniform(1.0, 1.5)
    v2 = gen.uniform(1.0, 1.5)
    m3 = gen.uniform(-1.0, -0.5)
    if change_points is None:
        lo = math.ceil(0.1 * n)
        hi = math.floor(0.9 * n)
        t1, t2 = sorted(int(v) for v in gen.choice(np.arange(lo, hi + 1), size=2, replace=False))
    else:
        t1, t2 = (int(c) for c in change_points)
        if not 1 <= t1 < t2 <= n - 1:
            raise ValueError("change points must satisfy 1 <= t1 < t2 <= n-1")

    noise = mu[None, :] + gen.standard_normal((n, 4)) * np.sqrt(s2)[None, :]
    env2 = slice(t1, t2)
    env3 = slice(t2, n)
    # Second environment: X2's noise gets a new mean and variance.
    noise[env2, 1] = m2 + gen.standard_normal(t2 - t1) * math.sqrt(v2)
    # Third environment: X3 is replaced outright.
    x3_new = m3 + gen.standard_normal(n - t2) * math.sqrt(s2[2])

    x1 = noise[:, 0]
    x2 = beta[0] * x1 + noise[:, 1]
    y = beta[1] * x1 + beta[2] * x2 + noise[:, 2]
    x3 = beta[3] * y + noise[:, 3]
    x3[env3] = x3_new
    x = np.column_stack([x1, x2, x3])
    return LabeledDataset(
        dataset=Dataset(y=y, x=x, column_names=("X1", "X2", "X3")),
        true_parents=(0, 1),
        true_change_points=(t1, t2),
        params={
            "beta": tuple(float(b) for b in beta),
            "noise_var": tuple(float(v) for v in s2),
            "noise_mean": tuple(float(m) for m in mu),
            "env2_mean": float(m2),
            "env2_var": float(v2),
            "env3_mean": float(m3),
        },
        noises=noise,
    )


def _simulate_var(
    n: int, seed: int, shock_value: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    """Three-variable recursion, optionally with X's assignment replaced once.

    The intervention instant is drawn uniformly from ``1..n`` regardless
    of whether a shock is applied, so runs with and without a shock share
    every noise draw.  The shock is applied inside the loop and therefore
    propagates through the dynamics of all later time points exactly as
    the structural model dictates.
    """
    total = n + _VAR_BURN_IN
    eps = rng.stream(seed, 3).standard_normal((total, 3))
    tau = int(rng.stream(seed, 4).integers(1, n + 1))
    shock_at = None if shock_value is None else _VAR_BURN_IN + tau - 1
    x = np.zeros(total)
    y = np.zeros(total)
    z = np.zeros(total)
    for t in range(total):
        xl = x[t - 1] if t else 0.0
        yl = y[t - 1] if t else 0.0
        zl = z[t - 1] if t else 0.0
        if t == shock_at:
            x[t] = shock_value
        else:
            x[t] = 0.5 * xl + 0.1 * yl + 0.1 * zl + eps[t, 0]
        y[t] = 0.5 * x[t] + 0.1 * xl + 0.2 * yl + 0.2 * zl + eps[t, 1]
        z[t] = 0.2 * x[t] + 0.2 * y[t] + 0.4 * xl + 0.4 * yl + 0.2 * zl + eps[t, 2]
    s = slice(_VAR_BURN_IN, total)
    return x[s].copy(), y[s].copy(), z[s].copy(), eps[s].copy(), tau


def gen_var_shock(n: int, shock_strength: float, seed: int) -> LabeledDataset:
    """Vector autoregression whose X assignment is shocked at one instant.

    The response Y depends instantaneously on X only, so the invariant
    predictor set under lag order 1 is ``{X}``.  At a uniformly drawn
    time the X assignment is replaced by the fixed shock value; the
    same-instant Y and Z and all later time points react through their
    unchanged equations.  A shock strength of zero means no intervention
    at all.
    """
    n = int(n)
    if n < 10:
        raise ValueError("n must be at least 10")
    shock = float(shock_strength)
    if shock != 0.0:
        x, y, z, eps, tau = _simulate_var(n, seed, shock_value=shock)
        cps = tuple(c for c in (tau - 1, tau) if 1 <= c <= n - 1)
    else:
        x, y, z, eps, tau = _simulate_var(n, seed)
        cps = ()
    return LabeledDataset(
        dataset=Dataset(y=y, x=np.column_stack([x, z]), column_names=("X", "Z")),
        true_parents=(0,),
        true_change_points=cps,
        params={"shock_strength": shock, "shock_time": tau},
        noises=eps,
    )


def gen_var_outlier(n: int, outlier_value: float, seed: int) -> LabeledDataset:
    """Same recursion as :func:`gen_var_shock`, then one Y value overwritten.

    The series is generated without any intervention and the recorded
    response at one uniformly drawn instant is replaced by the fixed
    value afterwards; nothing propagates.  With the same seed the result
    differs from ``gen_var_shock(n, 0.0, seed)`` in exactly that one
    response entry.
    """
    n = int(n)
    if n < 10:
        raise ValueError("n must be at least 10")
    x, y, z, eps, tau = _simulate_var(n, seed)
    y[tau - 1] = float(outlier_value)
    return LabeledDataset(
        dataset=Dataset(y=y, x=np.column_stack([x, z]), column_names=("X", "Z")),
        true_parents=(0,),
        true_change_points=(),
        params={"outlier_value": float(outlier_value), "outlier_time": tau},
        noises=eps,
    )


def gen_sign_flip_example(n: int, seed: int) -> LabeledDataset:
    """Coefficient +1 on the first half, -1 on the second, unit noise.

    The pooled regression coefficient is near zero, so residual means
    stay flat in both halves while per-half coefficients differ sharply:
    mean-shift statistics are blind here, coefficient statistics are not.
    """
    n = int(n)
    if n < 4 or n % 2:
        raise ValueError("n must be an even integer >= 4")
    gen = rng.stream(seed, 5)
    x = gen.standard_normal(n)
    noise = gen.standard_normal(n)
    half = n // 2
    beta = np.where(np.arange(n) < half, 1.0, -1.0)
    y = beta * x + noise
    return LabeledDataset(
        dataset=Dataset(y=y, x=x[:, None], column_names=("X1",)),
        true_parents=(0,),
        true_change_points=(half,),
        params={"beta_first": 1.0, "beta_second": -1.0},
        noises=noise[:, None],
    )


def gen_invariant_gaussian(
    n: int, d: int, seed: int, beta: np.ndarray | None = None, noise_sd: float = 1.0
) -> LabeledDataset:
    """A null-model dataset: one fixed linear Gaussian model throughout.

    Used by level and calibration experiments; every subset containing
    all d predictors satisfies the invariance hypothesis by construction
    (the full set trivially, as the model never changes).
    """
    n, d = int(n), int(d)
    if n < 4 or d < 1:
        raise ValueError("need n >= 4 and d >= 1")
    gen = rng.stream(seed, 6)
    x = gen.standard_normal((n, d))
    if beta is None:
        beta = np.ones(d)
    beta = np.asarray(beta, dtype=np.float64)
    noise = float(noise_sd) * gen.standard_normal(n)
    y = x @ beta + noise
    return LabeledDataset(
        dataset=Dataset(y=y, x=x),
        true_parents=tuple(range(d)),
        true_change_points=(),
        params={"beta": tuple(float(b) for b in beta), "noise_sd": float(noise_sd)},
        noises=noise[:, None],
    )
