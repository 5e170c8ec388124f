import csv
import io
import json

import pytest

from pathsde.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_coeffs_check(capsys):
    rc, out, _ = run(capsys, "coeffs", "check")
    data = json.loads(out)
    assert rc == 0 and data["ok"]
    assert abs(data["int_h"] - 1) < 1e-8


def test_variances(capsys):
    rc, out, _ = run(capsys, "variances", "--n-list", "1", "4", "16")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rc == 0 and len(rows) == 3
    for r in rows:
        assert abs(float(r["nu2"]) + float(r["sigma2"]) - 1) < 1e-8


def test_simulate_summary_and_records(capsys):
    rc, out, _ = run(capsys, "simulate", "--scheme", "adaptive", "--n", "8", "--reps", "50", "--seed", "0x10")
    assert rc == 0 and json.loads(out)["reps"] == 50
    rc, out, _ = run(capsys, "simulate", "--scheme", "interp", "--n", "8", "--reps", "5", "--records")
    assert rc == 0 and len(out.strip().split("\n")) == 6


def test_convergence_and_cost(capsys, tmp_path):
    rc, out, _ = run(capsys, "convergence", "--scheme", "interp", "--r", "1", "--n-list", "4", "8", "--reps", "200")
    assert rc == 0 and out.startswith("n,err1")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scheme": "adaptive", "n_list": [8, 16], "replications": 2000}))
    rc, out, _ = run(capsys, "cost", "--config", str(cfg))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rc == 0 and [int(r["n"]) for r in rows] == [8, 16]


def test_oracle_and_lower_bound(capsys):
    rc, out, _ = run(capsys, "oracle", "--n-list", "8", "64")
    assert rc == 0 and len(out.strip().split("\n")) == 3
    rc, out, _ = run(capsys, "oracle", "--p", "1", "--n-list", "8")
    assert rc == 0
    rc, out, _ = run(capsys, "lower-bound", "--n-list", "2", "8")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rc == 0 and rows[0]["constant_curve"] == ""


def test_moments(capsys):
    rc, out, _ = run(capsys, "moments", "--q-list", "0", "2", "2.5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rc == 0 and [r["status"] for r in rows] == ["finite", "finite", "diverging"]


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["simulate", "--scheme", "interp"],
        ["oracle", "--p", "3", "--n-list", "8"],
        ["convergence", "--r", "3"],
        ["convergence", "--config", "/nonexistent/cfg.json"],
        ["variances", "--tau1", "2", "--tau2", "1"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    try:
        rc = main(argv)
    except SystemExit as exc:
        rc = exc.code
    assert rc == 1
