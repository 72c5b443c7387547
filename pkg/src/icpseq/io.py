"""CSV ingestion and JSON/CSV emission.

Reads are strict: a header row is required, every cell must parse as a
finite decimal, and errors name the offending row and column.  Writes
use shortest round-trip float formatting, so a written dataset reloads
bit-for-bit.  JSON output contains nothing volatile (no timestamps, no
environment data): identical inputs yield identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .exceptions import MissingTargetError, ParseError
from .experiments import ExperimentTable
from .generators import LabeledDataset
from .regression import Dataset
from .resampling import DecoupledOutcome, TestOutcome
from .search import SearchReport


def _parse_cell(text: str, row: int, column: str, path: str) -> float:
    try:
        value = float(text)
    except ValueError:
        value = math.nan
    if not math.isfinite(value):
        raise ParseError(
            f"{path}: data row {row}, column {column!r}:"
            f" {text!r} is not a finite number"
        )
    return value


def load_csv(path: str | Path, target: str | int) -> Dataset:
    """Load a dataset whose rows are already in time order.

    ``target`` picks the response column by header name or 1-based
    position; the remaining columns become predictors with their names
    preserved.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        header = [name.strip() for name in header]
        if not header or any(not name for name in header):
            raise ParseError(f"{path}: header row has empty column names")

        if isinstance(target, str) and target in header:
            target_pos = header.index(target)
        else:
            try:
                pos = int(target)
            except (TypeError, ValueError):
                pos = 0
            if 1 <= pos <= len(header):
                target_pos = pos - 1
            else:
                raise MissingTargetError(
                    f"{path}: no column named {target!r} among {header}"
                )

        rows: list[list[float]] = []
        for i, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise ParseError(
                    f"{path}: data row {i} has {len(record)} fields,"
                    f" expected {len(header)}"
                )
            rows.append(
                [
                    _parse_cell(cell, i, header[j], str(path))
                    for j, cell in enumerate(record)
                ]
            )
    if len(rows) < 2:
        raise ParseError(f"{path}: need at least 2 data rows, found {len(rows)}")

    matrix = np.asarray(rows, dtype=np.float64)
    y = matrix[:, target_pos]
    x = np.delete(matrix, target_pos, axis=1)
    names = tuple(name for j, name in enumerate(header) if j != target_pos)
    return Dataset(y=y, x=x, column_names=names)


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_dataset_csv(path: str | Path, dataset: Dataset, target_name: str = "Y") -> None:
    """Write the response first, then the predictors, shortest round-trip."""
    if target_name in dataset.column_names:
        raise ValueError(f"target name {target_name!r} collides with a predictor")
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow((target_name, *dataset.column_names))
        for i in range(dataset.n):
            writer.writerow(
                [repr(float(dataset.y[i]))]
                + [repr(float(v)) for v in dataset.x[i]]
            )


def json_dumps(payload) -> str:
    """Stable JSON encoding: two-space indent, insertion order, no NaN."""
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _null_summary_dict(outcome: TestOutcome) -> dict:
    summary = outcome.null_summary
    return {
        "count": summary.count,
        "min": summary.minimum,
        "max": summary.maximum,
        "quantiles": {str(q): v for q, v in summary.quantiles},
    }


def outcome_to_dict(
    outcome: TestOutcome | DecoupledOutcome,
    subset_names: Iterable[str],
    config: dict,
) -> dict:
    """JSON payload for a single invariance test."""
    payload: dict = {
        "subset": list(subset_names),
        "p_value": outcome.p_value,
        "statistic": outcome.statistic_value,
        "reject": bool(outcome.reject),
        "alpha": outcome.alpha,
    }
    if isinstance(outcome, DecoupledOutcome):
        payload["coefficient"] = {
            "p_value": outcome.coefficient.p_value,
            "statistic": outcome.coefficient.statistic_value,
            "null": _null_summary_dict(outcome.coefficient),
        }
        payload["variance"] = {
            "p_value": outcome.variance.p_value,
            "statistic": outcome.variance.statistic_value,
            "null": _null_summary_dict(outcome.variance),
        }
    else:
        payload["null"] = _null_summary_dict(outcome)
    payload["config"] = config
    return payload


def report_to_dict(report: SearchReport) -> dict:
    """Search report payload with the fixed field names.

    ``indices`` are 1-based predictor positions; ``estimate`` and
    ``variables`` use column names.
    """
    names = report.column_names
    payload = {
        "estimate": [names[j] for j in report.estimate],
        "variables": [
            {"name": names[j], "p_value": report.variable_p_values[j]}
            for j in range(len(names))
        ],
        "subsets": [
            {
                "indices": [j + 1 for j in res.subset],
                "p_value": res.p_value,
                "statistic": res.statistic_value,
                "accepted": bool(res.accepted),
            }
            for res in report.subset_results
        ],
        "config": dict(report.config),
    }
    if report.chosen_lag is not None:
        payload["config"]["chosen_lag"] = report.chosen_lag
    payload["config"]["subsets_tested"] = report.subsets_tested
    payload["config"]["subsets_skipped"] = report.subsets_skipped
    return payload


def ground_truth_to_dict(labeled: LabeledDataset) -> dict:
    """Scalar ground truth sidecar for a simulated dataset."""
    names = labeled.dataset.column_names
    return {
        "true_parents": [names[j] for j in labeled.true_parents],
        "true_change_points": list(labeled.true_change_points),
        "params": {
            key: (list(value) if isinstance(value, tuple) else value)
            for key, value in labeled.params.items()
        },
    }


def table_to_csv_text(table: ExperimentTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_value(row[c]) for c in table.columns])
    return buffer.getvalue()


def table_to_dict(table: ExperimentTable) -> dict:
    return {
        "kind": table.kind,
        "params": table.params,
        "columns": list(table.columns),
        "rows": table.rows,
    }


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
