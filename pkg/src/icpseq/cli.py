"""Command-line interface.

Four subcommands:

* ``test``      one invariance test of a named predictor subset
* ``search``    full subset search with the intersection estimate
* ``simulate``  write a synthetic dataset (CSV) plus a ground-truth sidecar
* ``experiment`` run a Monte-Carlo study and write its table

Exit codes: 0 success, 2 invalid input or configuration, 1 runtime
failure inside a computation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as icpio
from .environments import default_comparison, default_grid
from .exceptions import (
    DegenerateKernelError,
    DegenerateResidualsError,
    EmptyComparisonSetError,
    InvalidChangePointsError,
    InvalidGridError,
    LagTooLargeError,
    MissingTargetError,
    ParseError,
    RankDeficientError,
    TooManySubsetsError,
    ZeroDenominatorError,
)
from .experiments import EXPERIMENT_KINDS, run_experiment
from .generators import ScmSpec, generate
from .regression import Dataset, normalize_subset
from .resampling import TestConfig, decoupled_test, test_invariance
from .search import LAG_STRATEGIES, lag_scan, prune_enabled_search, search
from .statistics import FAMILIES, StatisticSpec

STAT_CHOICES = FAMILIES + ("decoupled",)

SIMULATE_KINDS = {
    "changepoint": "changepoint_linear",
    "scm3": "scm_three_env",
    "var-shock": "var_shock",
    "var-outlier": "var_outlier",
    "sign-flip": "sign_flip",
}

_VALIDATION_ERRORS = (
    ParseError,
    MissingTargetError,
    InvalidGridError,
    InvalidChangePointsError,
    EmptyComparisonSetError,
    TooManySubsetsError,
    LagTooLargeError,
    ValueError,
    OSError,
)

_RUNTIME_ERRORS = (
    RankDeficientError,
    DegenerateResidualsError,
    ZeroDenominatorError,
    DegenerateKernelError,
)


def _csv_ints(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icpseq",
        description="Invariant causal prediction for sequentially ordered data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="CSV file, rows in time order")
        p.add_argument("--target", default="Y", help="response column name or 1-based index")

    def add_test_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--stat", choices=STAT_CHOICES, default="decoupled")
        p.add_argument("--combiner", choices=("max", "sum"), default="max")
        p.add_argument("--comparison", choices=("f1", "f2"), default="f2")
        p.add_argument(
            "--grid", type=_csv_ints, default=None,
            help="interior grid points, e.g. 50,100,150 (default: equispaced, about log(n) of them)",
        )
        p.add_argument("--bandwidth", type=float, default=None,
                       help="kernel bandwidth for hsic/smooth statistics")
        p.add_argument("-B", "--resamples", type=int, default=499)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--lags", type=int, default=0,
                       help="include this many lags of all variables")
        p.add_argument("--output", "-o", default=None, help="write JSON here instead of stdout")

    p_test = sub.add_parser("test", help="test one predictor subset for invariance")
    add_data_flags(p_test)
    p_test.add_argument(
        "--subset", default="",
        help="comma-separated predictor names or 1-based indices; empty for the empty set",
    )
    add_test_flags(p_test)

    p_search = sub.add_parser("search", help="test all subsets, intersect the accepted ones")
    add_data_flags(p_search)
    add_test_flags(p_search)
    p_search.add_argument("--max-subset-size", type=int, default=None)
    p_search.add_argument("--lag-set", type=_csv_ints, default=None,
                          help="scan these lag orders instead of a fixed --lags")
    p_search.add_argument("--lag-strategy", choices=LAG_STRATEGIES, default="max-set")
    p_search.add_argument("--prune", action="store_true",
                          help="stop testing once the estimate is settled")

    p_sim = sub.add_parser("simulate", help="write a synthetic dataset with known ground truth")
    p_sim.add_argument("--kind", choices=sorted(SIMULATE_KINDS), required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--alternative", type=int, default=1,
                       help="changepoint kind: which planted alternative (1, 2 or 3)")
    p_sim.add_argument("--shock-strength", type=float, default=10.0)
    p_sim.add_argument("--outlier-value", type=float, default=10.0)
    p_sim.add_argument("--change-points", type=_csv_ints, default=None,
                       help="scm3 kind: fix the two change points")
    p_sim.add_argument("--output", "-o", required=True,
                       help="CSV path; ground truth goes to <path>.truth.json")

    p_exp = sub.add_parser("experiment", help="run a Monte-Carlo study")
    p_exp.add_argument("--kind", choices=EXPERIMENT_KINDS, required=True)
    p_exp.add_argument("--reps", type=int, default=None, help="replication count")
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument(
        "--param", action="append", default=[], metavar="KEY=VALUE",
        help="override an experiment parameter; VALUE is parsed as JSON when possible",
    )
    p_exp.add_argument("--format", choices=("csv", "json"), default="csv")
    p_exp.add_argument("--output", "-o", default=None, help="write the table here")

    return parser


def _parse_subset(text: str, data: Dataset) -> tuple[int, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    indices = []
    for part in parts:
        if part in data.column_names:
            indices.append(data.column_names.index(part))
        else:
            try:
                pos = int(part)
            except ValueError:
                raise ValueError(
                    f"unknown predictor {part!r}; columns are {list(data.column_names)}"
                ) from None
            if not 1 <= pos <= data.d:
                raise ValueError(f"subset index {pos} out of range 1..{data.d}")
            indices.append(pos - 1)
    return normalize_subset(indices, data.d)


def _build_spec(args, n: int, width: int, row_offset: int) -> StatisticSpec:
    family = "t1" if args.stat == "decoupled" else args.stat
    if args.stat == "decoupled" or family in ("t1", "t2", "t3", "t4", "t5"):
        comparison = default_comparison(
            n,
            kind=args.comparison,
            grid=args.grid,
            width=width,
            row_offset=row_offset,
        )
        return StatisticSpec(family, combiner=args.combiner, comparison=comparison)
    return StatisticSpec(family, bandwidth=args.bandwidth)


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        icpio.write_text(output, text)


def _test_config_echo(args, data: Dataset) -> dict:
    pathlike = args.stat in ("hsic", "smooth-mean", "smooth-var")
    if pathlike:
        grid = None
    else:
        grid = list(args.grid if args.grid is not None else default_grid(data.n))
    return {
        "command": args.command,
        "input": args.input,
        "target": args.target,
        "statistic": args.stat,
        "combiner": None if pathlike else args.combiner,
        "comparison": None if pathlike else args.comparison,
        "grid": grid,
        "bandwidth": args.bandwidth,
        "resamples": args.resamples,
        "alpha": args.alpha,
        "lags": args.lags,
        "seed": args.seed,
    }


def _cmd_test(args) -> int:
    data = icpio.load_csv(args.input, args.target)
    subset = _parse_subset(args.subset, data)
    width = 1 + len(subset) + args.lags * (data.d + 1)
    spec = _build_spec(args, data.n, width, row_offset=args.lags)
    config = TestConfig(
        statistic=spec,
        resamples=args.resamples,
        alpha=args.alpha,
        lags=args.lags,
        seed=args.seed,
    )
    if args.stat == "decoupled":
        outcome = decoupled_test(data, subset, config)
    else:
        outcome = test_invariance(data, subset, config)
    echo = _test_config_echo(args, data)
    echo["subset"] = [data.column_names[j] for j in subset]
    payload = icpio.outcome_to_dict(
        outcome, (data.column_names[j] for j in subset), echo
    )
    _emit(icpio.json_dumps(payload), args.output)
    return 0


def _cmd_search(args) -> int:
    data = icpio.load_csv(args.input, args.target)
    max_lag = max(args.lag_set) if args.lag_set else args.lags
    width = 1 + data.d + max_lag * (data.d + 1)
    spec = _build_spec(args, data.n, width, row_offset=max_lag)
    config = TestConfig(
        statistic=spec,
        resamples=args.resamples,
        alpha=args.alpha,
        lags=args.lags,
        seed=args.seed,
    )
    test = "decoupled" if args.stat == "decoupled" else "single"
    if args.lag_set:
        report = lag_scan(
            data, config, args.lag_set, strategy=args.lag_strategy,
            test=test, max_subset_size=args.max_subset_size,
        )
    elif args.prune:
        report = prune_enabled_search(
            data, config, test=test, max_subset_size=args.max_subset_size
        )
    else:
        report = search(data, config, test=test, max_subset_size=args.max_subset_size)
    payload = icpio.report_to_dict(report)
    payload["config"]["command"] = "search"
    payload["config"]["input"] = args.input
    payload["config"]["target"] = args.target
    if args.stat not in ("hsic", "smooth-mean", "smooth-var"):
        payload["config"]["grid"] = list(
            args.grid if args.grid is not None else default_grid(data.n)
        )
    _emit(icpio.json_dumps(payload), args.output)
    return 0


def _cmd_simulate(args) -> int:
    parameters = {}
    if args.kind == "changepoint":
        parameters["alternative"] = args.alternative
    elif args.kind == "scm3" and args.change_points is not None:
        if len(args.change_points) != 2:
            raise ValueError("--change-points needs exactly two values, e.g. 40,80")
        parameters["change_points"] = args.change_points
    elif args.kind == "var-shock":
        parameters["shock_strength"] = args.shock_strength
    elif args.kind == "var-outlier":
        parameters["outlier_value"] = args.outlier_value
    labeled = generate(
        ScmSpec(kind=SIMULATE_KINDS[args.kind], n=args.n, seed=args.seed,
                parameters=parameters)
    )
    out = Path(args.output)
    icpio.write_dataset_csv(out, labeled.dataset)
    sidecar = out.with_name(out.name + ".truth.json")
    truth = icpio.ground_truth_to_dict(labeled)
    truth["kind"] = args.kind
    truth["n"] = args.n
    truth["seed"] = args.seed
    icpio.write_text(sidecar, icpio.json_dumps(truth))
    sys.stdout.write(f"wrote {out} and {sidecar}\n")
    return 0


def _parse_param(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ValueError(f"--param needs KEY=VALUE, got {text!r}")
    try:
        value: object = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _cmd_experiment(args) -> int:
    params: dict = {}
    for item in args.param:
        key, value = _parse_param(item)
        params[key] = value
    if args.reps is not None:
        params["replications"] = args.reps
    table = run_experiment(args.kind, params or None, seed=args.seed)
    if args.format == "csv":
        text = icpio.table_to_csv_text(table)
    else:
        text = icpio.json_dumps(icpio.table_to_dict(table))
    _emit(text, args.output)
    return 0


_COMMANDS = {
    "test": _cmd_test,
    "search": _cmd_search,
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = _COMMANDS[args.command]
    try:
        return command(args)
    except _RUNTIME_ERRORS as exc:
        print(f"icpseq: error: {exc}", file=sys.stderr)
        return 1
    except _VALIDATION_ERRORS as exc:
        print(f"icpseq: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
