"""Causal predictor search over subsets of the predictor columns.

Every subset S of the d predictor columns indexes one null hypothesis:
"regressing the response on S (plus lagged terms, if configured) gives a
model whose residuals are invariant over time".  The search tests each
hypothesis by exact resampling and intersects the accepted subsets; by
the level guarantee of the individual tests, the intersection is
contained in the true invariant predictor set with probability at least
``1 - alpha`` whenever some true invariant set exists.

Per-variable p-values follow the classical construction: variable j gets
the largest p-value among all tested subsets that *exclude* j, so a
small value means every model ignoring j was rejected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exceptions import LagTooLargeError, TooManySubsetsError
from .regression import Dataset
from .resampling import (
    DecoupledOutcome,
    TestConfig,
    TestOutcome,
    decoupled_test,
    test_invariance,
)

TEST_MODES = ("single", "decoupled")
LAG_STRATEGIES = ("max-set", "bonferroni-union")

#: Hard ceiling on the number of subsets a single search may enumerate.
DEFAULT_SUBSET_BUDGET = 1 << 20


@dataclass(frozen=True)
class SubsetResult:
    """Outcome of testing one predictor subset."""

    subset: tuple[int, ...]
    p_value: float
    statistic_value: float
    accepted: bool


@dataclass
class SearchReport:
    """Everything a search produced, in testing order.

    ``estimate`` is the intersection of accepted subsets (empty when no
    subset was accepted).  ``variable_p_values`` has one entry per
    predictor column.  ``subsets_skipped`` counts hypotheses pruned by
    early stopping; skipped subsets contribute to neither the estimate
    nor the per-variable p-values.
    """

    estimate: tuple[int, ...]
    subset_results: tuple[SubsetResult, ...]
    variable_p_values: tuple[float, ...]
    column_names: tuple[str, ...]
    config: dict
    subsets_tested: int
    subsets_skipped: int
    chosen_lag: int | None = None
    sub_reports: dict[int, "SearchReport"] | None = None

    @property
    def estimate_names(self) -> tuple[str, ...]:
        return tuple(self.column_names[j] for j in self.estimate)


def enumerate_subsets(
    d: int, max_subset_size: int | None = None
) -> list[tuple[int, ...]]:
    """All predictor subsets in size-then-lexicographic order."""
    cap = d if max_subset_size is None else min(int(max_subset_size), d)
    if cap < 0:
        raise ValueError("max_subset_size must be non-negative")
    out: list[tuple[int, ...]] = []
    for k in range(cap + 1):
        out.extend(itertools.combinations(range(d), k))
    return out


def _subset_count(d: int, max_subset_size: int | None) -> int:
    if max_subset_size is None:
        return 1 << d
    cap = min(int(max_subset_size), d)
    return sum(math.comb(d, k) for k in range(cap + 1))


def _config_echo(
    data: Dataset, config: TestConfig, test: str, max_subset_size: int | None, prune: bool
) -> dict:
    comparison = config.statistic.comparison
    return {
        "n": data.n,
        "d": data.d,
        "test": test,
        "statistic": config.statistic.family,
        "combiner": config.statistic.combiner,
        "comparison": None if comparison is None else comparison.kind,
        "comparison_pairs": None if comparison is None else len(comparison),
        "bandwidth": config.statistic.bandwidth,
        "resamples": config.resamples,
        "alpha": config.alpha,
        "lags": config.lags,
        "seed": config.seed,
        "max_subset_size": max_subset_size,
        "prune": prune,
    }


def _run_search(
    data: Dataset,
    config: TestConfig,
    test: str,
    max_subset_size: int | None,
    max_subsets: int,
    prune: bool,
) -> SearchReport:
    if test not in TEST_MODES:
        raise ValueError(f"test must be one of {TEST_MODES}")
    total = _subset_count(data.d, max_subset_size)
    if total > max_subsets:
        raise TooManySubsetsError(
            f"{total} subsets exceed the budget of {max_subsets};"
            " pass max_subset_size or raise max_subsets"
        )
    subsets = enumerate_subsets(data.d, max_subset_size)

    results: list[SubsetResult] = []
    running: set[int] | None = None
    skipped = 0
    for pos, subset in enumerate(subsets):
        if prune and running is not None and not running:
            # No further acceptance can change an already-empty
            # intersection, so the estimate is settled.
            skipped = len(subsets) - pos
            break
        if test == "single":
            outcome: TestOutcome | DecoupledOutcome = test_invariance(data, subset, config)
        else:
            outcome = decoupled_test(data, subset, config)
        accepted = outcome.p_value > config.alpha
        results.append(
            SubsetResult(
                subset=subset,
                p_value=outcome.p_value,
                statistic_value=outcome.statistic_value,
                accepted=accepted,
            )
        )
        if accepted:
            running = set(subset) if running is None else running & set(subset)

    estimate = tuple(sorted(running)) if running is not None else ()
    variable_p = []
    for j in range(data.d):
        excluding = [r.p_value for r in results if j not in r.subset]
        variable_p.append(max(excluding) if excluding else float("nan"))
    return SearchReport(
        estimate=estimate,
        subset_results=tuple(results),
        variable_p_values=tuple(variable_p),
        column_names=data.column_names,
        config=_config_echo(data, config, test, max_subset_size, prune),
        subsets_tested=len(results),
        subsets_skipped=skipped,
    )


def search(
    data: Dataset,
    config: TestConfig,
    test: str = "single",
    max_subset_size: int | None = None,
    max_subsets: int = DEFAULT_SUBSET_BUDGET,
) -> SearchReport:
    """Exhaustively test every subset and intersect the accepted ones."""
    return _run_search(data, config, test, max_subset_size, max_subsets, prune=False)


def prune_enabled_search(
    data: Dataset,
    config: TestConfig,
    test: str = "single",
    max_subset_size: int | None = None,
    max_subsets: int = DEFAULT_SUBSET_BUDGET,
    full_report: bool = False,
) -> SearchReport:
    """Like :func:`search` but stops once the estimate is settled.

    Subsets are visited in the same order as :func:`search`, and each
    subset's p-value is identical to the exhaustive run (substreams are
    keyed by subset identity, not position), so the returned estimate
    always equals the exhaustive one.  With ``full_report=True`` no
    pruning happens and the result matches :func:`search` exactly.
    """
    return _run_search(
        data, config, test, max_subset_size, max_subsets, prune=not full_report
    )


def lag_scan(
    data: Dataset,
    config: TestConfig,
    lag_set: Sequence[int],
    strategy: str = "max-set",
    test: str = "single",
    max_subset_size: int | None = None,
    max_subsets: int = DEFAULT_SUBSET_BUDGET,
) -> SearchReport:
    """Run the search across several lag orders and reconcile the results.

    ``"max-set"`` keeps the lag whose search (each at full level alpha)
    accepts the largest estimate, breaking ties towards the smallest lag.
    ``"bonferroni-union"`` runs every lag at level ``alpha / len(lags)``
    and returns the union of the estimates; subset rows of all lags are
    concatenated and per-variable p-values are Bonferroni-adjusted minima
    across lags.
    """
    if strategy not in LAG_STRATEGIES:
        raise ValueError(f"strategy must be one of {LAG_STRATEGIES}")
    lags = sorted(set(int(p) for p in lag_set))
    if not lags:
        raise ValueError("lag_set may not be empty")
    if lags[0] < 0:
        raise ValueError("lags must be non-negative")
    if lags[-1] > data.n - 2:
        raise LagTooLargeError(f"lag {lags[-1]} leaves fewer than 2 of {data.n} rows")

    if strategy == "max-set":
        reports = {
            p: search(
                data, replace(config, lags=p), test=test,
                max_subset_size=max_subset_size, max_subsets=max_subsets,
            )
            for p in lags
        }
        best = max(lags, key=lambda p: (len(reports[p].estimate), -p))
        chosen = reports[best]
        chosen.chosen_lag = best
        chosen.sub_reports = reports
        chosen.config = dict(chosen.config)
        chosen.config.update({"lag_strategy": strategy, "lag_set": lags})
        return chosen

    level = config.alpha / len(lags)
    reports = {
        p: search(
            data, replace(config, lags=p, alpha=level), test=test,
            max_subset_size=max_subset_size, max_subsets=max_subsets,
        )
        for p in lags
    }
    union: set[int] = set()
    for rep in reports.values():
        union |= set(rep.estimate)
    variable_p = tuple(
        min(
            1.0,
            len(lags) * min(rep.variable_p_values[j] for rep in reports.values()),
        )
        for j in range(data.d)
    )
    all_rows = tuple(
        row for p in lags for row in reports[p].subset_results
    )
    echo = dict(reports[lags[0]].config)
    echo.update(
        {
            "lag_strategy": strategy,
            "lag_set": lags,
            "alpha": config.alpha,
            "per_lag_alpha": level,
            "lags": None,
        }
    )
    return SearchReport(
        estimate=tuple(sorted(union)),
        subset_results=all_rows,
        variable_p_values=variable_p,
        column_names=data.column_names,
        config=echo,
        subsets_tested=sum(r.subsets_tested for r in reports.values()),
        subsets_skipped=sum(r.subsets_skipped for r in reports.values()),
        sub_reports=reports,
    )
