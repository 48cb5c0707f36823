import csv
import io
import json

import pytest

from pairtest.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_text(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "12", "--eps", "1/3", "--seed", "4")
    assert code == 0
    assert "complete    True" in out and "transcript:" in out


def test_simulate_json_and_semantics(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "16", "--delta", "1/4", "--alg", "bounded",
                       "--semantics", "and", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["fully_identified"] and d["correct"] and d["semantics"] == "and"


def test_simulate_explicit_population(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "4", "--population", "SSWW", "--alg", "cover")
    assert code == 0 and "state       SSWW" in out


def test_experiment_csv_to_file(tmp_path, capsys):
    dest = tmp_path / "out.csv"
    code, _, _ = run(capsys, "experiment", "--n", "20,40", "--eps", "0.25", "--trials", "4",
                     "--alg", "adaptive-known", "--out", str(dest))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(dest.read_text())))
    assert len(rows) == 8 and rows[0]["algorithm"] == "adaptive-known"


def test_experiment_plot_data_and_json(capsys):
    code, out, _ = run(capsys, "experiment", "--n", "20", "--eps", "1/4", "--trials", "3", "--plot-data")
    assert code == 0 and out.startswith("# algorithm=random-matching")
    code, out, _ = run(capsys, "experiment", "--n", "20", "--eps", "1/4", "--trials", "3", "--format", "json")
    assert code == 0 and len(json.loads(out)["rows"]) == 4


def test_experiment_partial_warns(capsys):
    code, _, err = run(capsys, "experiment", "--n", "10", "--eps", "0.1", "--alg", "adaptive-unknown",
                       "--trials", "2")
    assert code == 0 and "partial" in err


def test_analyze_formats(capsys):
    code, out, _ = run(capsys, "analyze", "--n", "100", "--eps", "0.2")
    assert code == 0 and "rounds_for_confidence" in out and "39" in out
    code, out, _ = run(capsys, "analyze", "--n", "100", "--eps", "0.2", "--k", "1,39", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["k"] for r in rows] == ["1", "39"]
    code, out, _ = run(capsys, "analyze", "--n", "100", "--eps", "0.2", "--format", "json")
    assert json.loads(out)["summary"]["rounds_simplified"] == 42


def test_verify_ok(capsys):
    code, out, _ = run(capsys, "verify", "--n", "6", "--trials", "40")
    assert code == 0 and "0 mismatches" in out


def test_verify_mismatch_exit_code(capsys, monkeypatch):
    import pairtest.cli as cli
    monkeypatch.setattr(cli, "verify_inference", lambda *a, **k: [{"case": 0, "population": "SW",
                                                                    "count_constraint": False}])
    code, _, _ = run(capsys, "verify", "--n", "4", "--trials", "1")
    assert code == 3


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["simulate"],
    ["simulate", "--n", "10"],
    ["simulate", "--n", "10", "--eps", "1/5", "--delta", "4/5"],
    ["experiment", "--n", "x", "--eps", "0.2"],
    ["experiment", "--n", "10", "--eps", "0.2", "--trials", "0"],
    ["analyze", "--n", "10", "--eps", "0.05"],
    ["verify", "--n", "40"],
    ["simulate", "--n", "10", "--eps", "1/5", "--seed", "-1"],
])
def test_usage_errors_exit_1(capsys, argv):
    assert main(argv) == 1


def test_runtime_error_exit_2(capsys):
    code, _, err = run(capsys, "simulate", "--n", "8", "--eps", "1/4", "--alg", "bounded")
    assert code == 2 and "DeltaTooLarge" in err


def test_module_entry_point():
    import subprocess
    import sys
    p = subprocess.run([sys.executable, "-m", "pairtest", "analyze", "--n", "20", "--eps", "1/4"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "rounds_for_confidence" in p.stdout
