"""Monte-Carlo experiment harness.

Five studies, each emitting a flat table of rates with binomial standard
errors:

* ``level``: rejection rate of every statistic family on data where the
  tested subset really is invariant.
* ``rate``: power of the decoupled versus the combined (Chow-type) test
  on the three planted change-point alternatives as n grows.
* ``coverage``: frequency that the estimated set stays inside the true
  parents on the three-environment structural model, plus rejection
  rates of the empty set and of the intervened child.
* ``shock``: per-subset rejection and estimate frequencies on the
  autoregressive model with a one-time shock (or an outlier).
* ``splitting``: effect of subdividing the largest environment on the
  detection rate of the first parent.

Replications are seeded through :func:`icpseq.rng.child_seed`, so every
table is a pure function of (kind, params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import rng
from .environments import (
    MIN_SIZE_MARGIN,
    changepoint_environments,
    comparison_set,
    default_comparison,
    equidistant_grid,
    grid_environments,
)
from .generators import (
    gen_changepoint_alternative,
    gen_invariant_gaussian,
    gen_scm_three_env,
    gen_var_outlier,
    gen_var_shock,
)
from .resampling import TestConfig, decoupled_test, test_invariance
from .search import prune_enabled_search, search
from .statistics import BLOCK_FAMILIES, FAMILIES, StatisticSpec

EXPERIMENT_KINDS = ("level", "rate", "coverage", "shock", "splitting")

# Below this, binomial standard errors are too wide for the tables to
# mean anything.
MIN_REPLICATIONS = 50

LEVEL_STATISTICS = FAMILIES + ("decoupled",)


@dataclass
class ExperimentTable:
    """Result of one experiment run: named columns and one dict per row."""

    kind: str
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def append(self, **row) -> None:
        if set(row) != set(self.columns):
            raise ValueError(
                f"row keys {sorted(row)} do not match columns {sorted(self.columns)}"
            )
        self.rows.append(row)

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise KeyError(name)
        return [row[name] for row in self.rows]


def _rate_se(hits: int, reps: int) -> tuple[float, float]:
    rate = hits / reps
    return rate, math.sqrt(rate * (1.0 - rate) / reps)


def _resolve(defaults: dict, params: dict | None) -> dict:
    merged = dict(defaults)
    if params:
        unknown = sorted(set(params) - set(defaults))
        if unknown:
            raise ValueError(f"unknown experiment parameters: {unknown}")
        merged.update(params)
    merged["replications"] = int(merged["replications"])
    if merged["replications"] < MIN_REPLICATIONS:
        raise ValueError(f"replications must be at least {MIN_REPLICATIONS}")
    return merged


def _echo(kind: str, p: dict, seed: int) -> dict:
    out = {"kind": kind, "seed": int(seed)}
    out.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in p.items()})
    return out


def _run_level(params: dict | None, seed: int) -> ExperimentTable:
    p = _resolve(
        {
            "n": 200,
            "d": 2,
            "replications": 500,
            "resamples": 199,
            "alpha": 0.05,
            "combiner": "max",
            "comparison": "f2",
            "grid": None,
            "statistics": LEVEL_STATISTICS,
        },
        params,
    )
    labels = tuple(p["statistics"])
    for label in labels:
        if label not in LEVEL_STATISTICS:
            raise ValueError(f"unknown statistic {label!r}")
    n, d, reps = int(p["n"]), int(p["d"]), p["replications"]
    comparison = default_comparison(
        n, kind=p["comparison"], grid=p["grid"], width=1 + d
    )

    def spec_for(label: str) -> StatisticSpec:
        if label in BLOCK_FAMILIES or label == "decoupled":
            family = "t1" if label == "decoupled" else label
            return StatisticSpec(family, combiner=p["combiner"], comparison=comparison)
        return StatisticSpec(label)

    subset = tuple(range(d))
    hits = dict.fromkeys(labels, 0)
    for r in range(reps):
        data = gen_invariant_gaussian(n, d, rng.child_seed(seed, 1, r, 0)).dataset
        test_seed = rng.child_seed(seed, 1, r, 1)
        for label in labels:
            config = TestConfig(
                statistic=spec_for(label),
                resamples=int(p["resamples"]),
                alpha=float(p["alpha"]),
                seed=test_seed,
            )
            if label == "decoupled":
                rejected = decoupled_test(data, subset, config).reject
            else:
                rejected = test_invariance(data, subset, config).reject
            hits[label] += bool(rejected)

    table = ExperimentTable(
        kind="level",
        columns=(
            "statistic",
            "rejection_rate",
            "std_error",
            "replications",
            "alpha",
            "resamples",
        ),
        params=_echo("level", p, seed),
    )
    for label in labels:
        rate, se = _rate_se(hits[label], reps)
        table.append(
            statistic=label,
            rejection_rate=rate,
            std_error=se,
            replications=reps,
            alpha=float(p["alpha"]),
            resamples=int(p["resamples"]),
        )
    return table


def _run_rate(params: dict | None, seed: int) -> ExperimentTable:
    p = _resolve(
        {
            "ns": (200, 500, 1000, 2000),
            "alternatives": (1, 2, 3),
            "replications": 200,
            "resamples": 199,
            "alpha": 0.05,
            "combiner": "max",
        },
        params,
    )
    reps = p["replications"]
    tests = ("decoupled", "combined")
    table = ExperimentTable(
        kind="rate",
        columns=(
            "alternative",
            "n",
            "test",
            "rejection_rate",
            "std_error",
            "replications",
        ),
        params=_echo("rate", p, seed),
    )
    for alt in p["alternatives"]:
        for n in p["ns"]:
            n = int(n)
            # Two blocks split at the true parameter change.
            envs = changepoint_environments(n, (n // 2,))
            comparison = comparison_set(envs, kind="f1", min_size=2 + MIN_SIZE_MARGIN)
            hits = dict.fromkeys(tests, 0)
            for r in range(reps):
                data = gen_changepoint_alternative(
                    n, alt, rng.child_seed(seed, 2, alt, n, r, 0)
                ).dataset
                test_seed = rng.child_seed(seed, 2, alt, n, r, 1)
                base = dict(
                    resamples=int(p["resamples"]),
                    alpha=float(p["alpha"]),
                    seed=test_seed,
                )
                decoupled_cfg = TestConfig(
                    statistic=StatisticSpec(
                        "t1", combiner=p["combiner"], comparison=comparison
                    ),
                    **base,
                )
                combined_cfg = TestConfig(
                    statistic=StatisticSpec(
                        "t3", combiner=p["combiner"], comparison=comparison
                    ),
                    **base,
                )
                hits["decoupled"] += decoupled_test(data, (0,), decoupled_cfg).reject
                hits["combined"] += test_invariance(data, (0,), combined_cfg).reject
            for test in tests:
                rate, se = _rate_se(hits[test], reps)
                table.append(
                    alternative=int(alt),
                    n=n,
                    test=test,
                    rejection_rate=rate,
                    std_error=se,
                    replications=reps,
                )
    return table


def _run_coverage(params: dict | None, seed: int) -> ExperimentTable:
    p = _resolve(
        {
            "ns": (100, 200, 300, 400, 500),
            "replications": 200,
            "resamples": 199,
            "alpha": 0.05,
            "combiners": ("max", "sum"),
            "grid_points": 10,
        },
        params,
    )
    reps = p["replications"]
    table = ExperimentTable(
        kind="coverage",
        columns=(
            "n",
            "combiner",
            "coverage_rate",
            "coverage_se",
            "reject_empty_rate",
            "reject_empty_se",
            "reject_x3_rate",
            "reject_x3_se",
            "replications",
        ),
        params=_echo("coverage", p, seed),
    )
    for n in p["ns"]:
        n = int(n)
        comparison = default_comparison(
            n, kind="f2", grid=equidistant_grid(n, int(p["grid_points"])), width=4
        )
        for combiner in p["combiners"]:
            covered = rej_empty = rej_x3 = 0
            for r in range(reps):
                # Datasets and null draws are shared across combiners, so
                # the max/sum comparison is paired.
                data = gen_scm_three_env(n, rng.child_seed(seed, 3, n, r, 0)).dataset
                config = TestConfig(
                    statistic=StatisticSpec(
                        "t1", combiner=combiner, comparison=comparison
                    ),
                    resamples=int(p["resamples"]),
                    alpha=float(p["alpha"]),
                    seed=rng.child_seed(seed, 3, n, r, 1),
                )
                report = search(data, config, test="decoupled")
                covered += set(report.estimate) <= {0, 1}
                by_subset = {res.subset: res for res in report.subset_results}
                rej_empty += not by_subset[()].accepted
                rej_x3 += not by_subset[(2,)].accepted
            cov, cov_se = _rate_se(covered, reps)
            emp, emp_se = _rate_se(rej_empty, reps)
            x3, x3_se = _rate_se(rej_x3, reps)
            table.append(
                n=n,
                combiner=combiner,
                coverage_rate=cov,
                coverage_se=cov_se,
                reject_empty_rate=emp,
                reject_empty_se=emp_se,
                reject_x3_rate=x3,
                reject_x3_se=x3_se,
                replications=reps,
            )
    return table


def _subset_label(subset: tuple[int, ...], names: tuple[str, ...]) -> str:
    return "{" + ",".join(names[j] for j in subset) + "}"


def _run_shock(params: dict | None, seed: int) -> ExperimentTable:
    p = _resolve(
        {
            "variant": "shock",
            "values": (0.0, 30.0),
            "n": 200,
            "replications": 200,
            "resamples": 199,
            "alpha": 0.05,
            "lags": 1,
            "grid": tuple(range(20, 181, 20)),
            "combiner": "sum",
        },
        params,
    )
    variant = str(p["variant"])
    if variant not in ("shock", "outlier"):
        raise ValueError("variant must be 'shock' or 'outlier'")
    generator = gen_var_shock if variant == "shock" else gen_var_outlier
    n, reps, lags = int(p["n"]), p["replications"], int(p["lags"])
    # Widest design: intercept + both predictors + lagged copies of all
    # three observed series.
    width = 1 + 2 + lags * 3
    # Per-block refits on lag-augmented designs carry an O(1/rows) bias
    # (regressors depend on earlier noise) that the resampled null does
    # not reproduce.  Ten rows per fitted coefficient keeps that bias
    # inside the resampling noise while leaving every multi-cell window
    # of the grid available for localizing the shock.
    comparison = default_comparison(
        n, kind="f2", grid=p["grid"], width=width, row_offset=lags,
        min_size=10 * width,
    )
    table = ExperimentTable(
        kind="shock",
        columns=(
            "variant",
            "value",
            "subset",
            "rejection_rate",
            "rejection_se",
            "estimate_rate",
            "estimate_se",
            "replications",
        ),
        params=_echo("shock", p, seed),
    )
    for vi, value in enumerate(p["values"]):
        rejections: dict[tuple[int, ...], int] = {}
        estimates: dict[tuple[int, ...], int] = {}
        names: tuple[str, ...] = ()
        for r in range(reps):
            labeled = generator(n, float(value), rng.child_seed(seed, 4, vi, r, 0))
            names = labeled.dataset.column_names
            config = TestConfig(
                statistic=StatisticSpec(
                    "t1", combiner=p["combiner"], comparison=comparison
                ),
                resamples=int(p["resamples"]),
                alpha=float(p["alpha"]),
                lags=lags,
                seed=rng.child_seed(seed, 4, vi, r, 1),
            )
            report = search(labeled.dataset, config, test="decoupled")
            for res in report.subset_results:
                rejections.setdefault(res.subset, 0)
                estimates.setdefault(res.subset, 0)
                rejections[res.subset] += not res.accepted
            estimates[report.estimate] += 1
        for subset in sorted(rejections, key=lambda s: (len(s), s)):
            rej, rej_se = _rate_se(rejections[subset], reps)
            est, est_se = _rate_se(estimates[subset], reps)
            table.append(
                variant=variant,
                value=float(value),
                subset=_subset_label(subset, names),
                rejection_rate=rej,
                rejection_se=rej_se,
                estimate_rate=est,
                estimate_se=est_se,
                replications=reps,
            )
    return table


def _split_grid(n: int, change_points: tuple[int, int], splits: int) -> tuple[int, ...]:
    """Grid on the true change points plus ``splits`` points in the tail."""
    t1, t2 = change_points
    extra = [
        round(t2 + i * (n - t2) / (splits + 1)) for i in range(1, splits + 1)
    ]
    points = sorted({t1, t2, *extra})
    return tuple(g for g in points if 0 < g < n)


def _run_splitting(params: dict | None, seed: int) -> ExperimentTable:
    p = _resolve(
        {
            "n": 200,
            "change_points": (15, 30),
            "splits": (0, 1, 2, 3, 4),
            "replications": 200,
            "resamples": 199,
            "alpha": 0.05,
            "combiner": "sum",
        },
        params,
    )
    n, reps = int(p["n"]), p["replications"]
    cps = tuple(int(c) for c in p["change_points"])
    table = ExperimentTable(
        kind="splitting",
        columns=(
            "splits",
            "grid",
            "x1_rate",
            "x1_se",
            "x2_rate",
            "x2_se",
            "replications",
        ),
        params=_echo("splitting", p, seed),
    )
    seeds = [
        (rng.child_seed(seed, 5, r, 0), rng.child_seed(seed, 5, r, 1))
        for r in range(reps)
    ]
    for splits in p["splits"]:
        grid = _split_grid(n, cps, int(splits))
        comparison = comparison_set(
            grid_environments(n, grid), kind="f2", min_size=4 + MIN_SIZE_MARGIN
        )
        x1_hits = x2_hits = 0
        for data_seed, test_seed in seeds:
            # One dataset per replication, shared by every grid variant.
            data = gen_scm_three_env(n, data_seed, change_points=cps).dataset
            config = TestConfig(
                statistic=StatisticSpec(
                    "t1", combiner=p["combiner"], comparison=comparison
                ),
                resamples=int(p["resamples"]),
                alpha=float(p["alpha"]),
                seed=test_seed,
            )
            estimate = prune_enabled_search(data, config, test="decoupled").estimate
            x1_hits += 0 in estimate
            x2_hits += 1 in estimate
        x1, x1_se = _rate_se(x1_hits, reps)
        x2, x2_se = _rate_se(x2_hits, reps)
        table.append(
            splits=int(splits),
            grid=",".join(str(g) for g in grid),
            x1_rate=x1,
            x1_se=x1_se,
            x2_rate=x2,
            x2_se=x2_se,
            replications=reps,
        )
    return table


_RUNNERS = {
    "level": _run_level,
    "rate": _run_rate,
    "coverage": _run_coverage,
    "shock": _run_shock,
    "splitting": _run_splitting,
}


def run_experiment(kind: str, params: dict | None = None, seed: int = 0) -> ExperimentTable:
    """Run one named experiment and return its table.

    ``params`` overrides the kind's defaults; unknown keys and
    replication counts below :data:`MIN_REPLICATIONS` are rejected.
    Results are deterministic in (kind, params, seed).
    """
    kind = str(kind).lower()
    runner = _RUNNERS.get(kind)
    if runner is None:
        raise ValueError(f"kind must be one of {EXPERIMENT_KINDS}")
    return runner(params, seed)
