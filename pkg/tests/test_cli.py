"""End-to-end tests of the command-line interface."""

import json

import numpy as np
import pytest

from icpseq import load_csv
from icpseq.cli import main


def _simulate(tmp_path, *extra, kind="scm3", n=60, seed=0):
    out = tmp_path / "data.csv"
    argv = [
        "simulate", "--kind", kind, "--n", str(n), "--seed", str(seed),
        "-o", str(out), *extra,
    ]
    assert main(argv) == 0
    return out


# -------------------------------------------------------------- simulate


def test_simulate_writes_dataset_and_truth_sidecar(tmp_path, capsys):
    out = _simulate(tmp_path, "--change-points", "20,40")
    sidecar = tmp_path / "data.csv.truth.json"
    assert out.exists() and sidecar.exists()
    assert "wrote" in capsys.readouterr().out

    truth = json.loads(sidecar.read_text(encoding="utf-8"))
    assert truth["true_parents"] == ["X1", "X2"]
    assert truth["true_change_points"] == [20, 40]
    assert truth["kind"] == "scm3"
    assert truth["n"] == 60 and truth["seed"] == 0

    data = load_csv(out, target="Y")
    assert data.n == 60
    assert data.column_names == ("X1", "X2", "X3")


def test_simulate_other_kinds(tmp_path):
    out = _simulate(tmp_path, "--shock-strength", "5.5", kind="var-shock", n=50)
    truth = json.loads(
        (tmp_path / "data.csv.truth.json").read_text(encoding="utf-8")
    )
    assert truth["params"]["shock_strength"] == 5.5
    assert load_csv(out, target="Y").column_names == ("X", "Z")

    _simulate(tmp_path, kind="sign-flip", n=40)
    _simulate(tmp_path, "--alternative", "3", kind="changepoint", n=40)


def test_simulate_rejects_malformed_change_points(tmp_path):
    code = main(
        ["simulate", "--kind", "scm3", "--n", "60", "--change-points", "10",
         "-o", str(tmp_path / "x.csv")]
    )
    assert code == 2


# ------------------------------------------------------------------ test


def test_single_subset_test_emits_json(tmp_path, capsys):
    data = _simulate(tmp_path, "--change-points", "20, 40")
    capsys.readouterr()
    code = main(
        ["test", "--input", str(data), "--subset", "X1,X2",
         "-B", "19", "--seed", "1"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["subset"] == ["X1", "X2"]
    assert 0.0 < payload["p_value"] <= 1.0
    assert isinstance(payload["reject"], bool)
    assert payload["config"]["statistic"] == "decoupled"
    assert payload["config"]["subset"] == ["X1", "X2"]
    assert "coefficient" in payload and "variance" in payload


def test_subset_accepts_one_based_indices(tmp_path, capsys):
    data = _simulate(tmp_path)
    capsys.readouterr()
    assert main(["test", "--input", str(data), "--subset", "X1,X3", "-B", "19"]) == 0
    by_name = capsys.readouterr().out
    assert main(["test", "--input", str(data), "--subset", "3,1", "-B", "19"]) == 0
    by_index = capsys.readouterr().out
    assert by_index == by_name


def test_path_statistic_through_the_cli(tmp_path, capsys):
    data = _simulate(tmp_path, kind="sign-flip", n=40)
    capsys.readouterr()
    code = main(
        ["test", "--input", str(data), "--subset", "X1", "--stat", "hsic", "-B", "19"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["combiner"] is None
    assert payload["config"]["comparison"] is None
    assert payload["config"]["grid"] is None
    assert "null" in payload


def test_output_flag_writes_instead_of_printing(tmp_path, capsys):
    data = _simulate(tmp_path)
    capsys.readouterr()
    out = tmp_path / "outcome.json"
    code = main(
        ["test", "--input", str(data), "--subset", "", "-B", "19", "-o", str(out)]
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["subset"] == []


# ---------------------------------------------------------------- search


def test_search_reports_and_is_byte_stable(tmp_path):
    data = _simulate(tmp_path, "--change-points", "20,40", seed=3)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    argv = ["search", "--input", str(data), "-B", "19", "--seed", "2"]
    assert main(argv + ["-o", str(first)]) == 0
    assert main(argv + ["-o", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    payload = json.loads(first.read_text(encoding="utf-8"))
    assert list(payload) == ["estimate", "variables", "subsets", "config"]
    assert len(payload["variables"]) == 3
    assert len(payload["subsets"]) == 8
    for row in payload["subsets"]:
        assert set(row) == {"indices", "p_value", "statistic", "accepted"}
    assert payload["config"]["command"] == "search"
    assert payload["config"]["input"] == str(data)
    assert payload["config"]["grid"]  # defaulted, echoed for reproducibility
    assert payload["config"]["subsets_tested"] == 8


def test_search_with_lag_scan(tmp_path, capsys):
    data = _simulate(tmp_path, kind="changepoint", n=40)
    capsys.readouterr()
    code = main(
        ["search", "--input", str(data), "--lag-set", "0,1", "-B", "19"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["chosen_lag"] in (0, 1)
    assert payload["config"]["lag_strategy"] == "max-set"
    assert payload["config"]["lag_set"] == [0, 1]


def test_search_with_pruning(tmp_path, capsys):
    data = _simulate(tmp_path, seed=5)
    capsys.readouterr()
    code = main(
        ["search", "--input", str(data), "--prune", "--stat", "t1", "-B", "19"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["prune"] is True
    tested = payload["config"]["subsets_tested"]
    skipped = payload["config"]["subsets_skipped"]
    assert tested + skipped == 8
    assert len(payload["subsets"]) == tested


# ------------------------------------------------------------ experiment


def test_experiment_csv_output(tmp_path):
    out = tmp_path / "table.csv"
    code = main(
        [
            "experiment", "--kind", "level", "--reps", "50", "--seed", "1",
            "--param", "n=40", "--param", 'statistics=["t4"]',
            "--param", "resamples=19", "-o", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "statistic,rejection_rate,std_error,replications,alpha,resamples"
    assert len(lines) == 2
    assert lines[1].startswith("t4,")


def test_experiment_json_output(capsys):
    code = main(
        [
            "experiment", "--kind", "level", "--reps", "50",
            "--param", "n=40", "--param", 'statistics=["t4"]',
            "--param", "resamples=19", "--format", "json",
        ]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["kind"] == "level"
    assert payload["params"]["replications"] == 50
    assert len(payload["rows"]) == 1


# ------------------------------------------------------------ exit codes


def test_unknown_flag_exits_two(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["search", "--input", "x.csv", "--frobnicate"])
    assert err.value.code == 2


def test_bad_choice_exits_two(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["test", "--input", "x.csv", "--stat", "t9"])
    assert err.value.code == 2


def test_missing_input_file_exits_two(tmp_path):
    assert main(["test", "--input", str(tmp_path / "nope.csv"), "-B", "19"]) == 2


def test_unknown_subset_name_exits_two(tmp_path):
    data = _simulate(tmp_path)
    assert main(["test", "--input", str(data), "--subset", "W", "-B", "19"]) == 2
    assert main(["test", "--input", str(data), "--subset", "7", "-B", "19"]) == 2


def test_invalid_config_exits_two(tmp_path):
    data = _simulate(tmp_path)
    assert main(["test", "--input", str(data), "-B", "5"]) == 2
    assert main(["test", "--input", str(data), "--alpha", "1.5", "-B", "19"]) == 2
    assert main(["experiment", "--kind", "level", "--param", "bogus"]) == 2
    assert main(["experiment", "--kind", "level", "--param", "bogus=1"]) == 2


def test_degenerate_data_exits_one(tmp_path):
    rows = ["Y,A,B"]
    gen = np.random.default_rng(0)
    for _ in range(30):
        a = gen.standard_normal()
        rows.append(f"{gen.standard_normal()},{a},{a}")
    path = tmp_path / "dup.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    code = main(["test", "--input", str(path), "--subset", "A,B", "-B", "19"])
    assert code == 1
