import csv
import io
import json
import subprocess
import sys

import pytest

from nsystem import reference
from nsystem.cli import main

SYM = ["--lambda1", "80", "--lambda2", "20", "--n1", "100", "--n2", "100", "--mu1", "1", "--mu2", "1"]
TINY = ["--lambda1", "0.4", "--lambda2", "0.2", "--n1", "1", "--n2", "1", "--mu1", "1", "--mu2", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fluid_symmetric(capsys):
    code, out, _ = run(capsys, "fluid", *SYM)
    assert code == 0
    doc = json.loads(out)
    f = doc["fluid"]
    assert f["T"] == pytest.approx(1.0) and f["beta"] == pytest.approx(0.5)
    assert f["m1"] == pytest.approx(50.0) and f["m2"] == pytest.approx(50.0)
    assert doc["clt_unscaled"]["var_i1"] == pytest.approx(37.5)
    assert doc["k_geometric"][0] == pytest.approx(0.375)


def test_exact_with_oracle(capsys):
    code, out, err = run(capsys, "exact", *TINY, "--oracle", "--qmax", "40")
    assert code == 0
    doc = json.loads(out)
    assert all(abs(v) <= 1e-6 for v in doc["oracle"]["deltas"].values())
    assert "exact-vs-ctmc mean_i1" in err


def test_exact_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "exact", *TINY, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 6
    assert sum(float(r["prob"]) for r in rows) == pytest.approx(1.0)
    path = tmp_path / "t.csv"
    assert run(capsys, "exact", *TINY, "--format", "csv", "--out", str(path))[0] == 0
    assert path.read_text().splitlines()[0] == "k,i1,i2,prob"


def test_params_file(capsys, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"lambda1": 80, "lambda2": 20, "n1": 100, "n2": 100, "mu1": 1, "mu2": 1}))
    code, out, _ = run(capsys, "fluid", "--params", str(path))
    assert code == 0 and json.loads(out)["fluid"]["T"] == pytest.approx(1.0)
    path.write_text(json.dumps({"lambda1": 80, "lambda2": 20, "n1": 100, "n2": 100, "mu1": 1, "mu2": 1,
                                "rho": 0.5}))
    code, _, err = run(capsys, "fluid", "--params", str(path))
    assert code == 2 and "rho" in err


def test_missing_or_invalid_params(capsys):
    code, _, err = run(capsys, "fluid", "--lambda1", "1")
    assert code == 2 and "--n1" in err
    code, _, err = run(capsys, "exact", "--lambda1", "150", "--lambda2", "60", "--n1", "100", "--n2", "100",
                       "--mu1", "1", "--mu2", "1")
    assert code == 2


def test_reproduce_tables(capsys):
    code, out, _ = run(capsys, "reproduce", "--table", "1")
    assert code == 0
    assert out.count("\n") == 8 and "PASS" in out
    code, out, _ = run(capsys, "reproduce", "--table", "2")
    assert code == 0 and "PASS" in out


def test_reproduce_breach_sets_exit_code(capsys, monkeypatch):
    monkeypatch.setitem(reference.TABLE2, 0.8, 49.90)
    code, out, _ = run(capsys, "reproduce", "--table", "2")
    assert code == 1 and "FAIL" in out


def test_reproduce_writes_artifact(capsys, tmp_path):
    path = tmp_path / "t1.json"
    assert run(capsys, "reproduce", "--table", "1", "--out", str(path))[0] == 0
    doc = json.loads(path.read_text())
    assert doc["pass"] and len(doc["rows"]) == 6


def test_simulate_and_trace(capsys, tmp_path):
    trace = tmp_path / "tr.csv"
    args = ["simulate", *TINY, "--horizon", "500", "--seed", "4", "--trace", str(trace)]
    code, out, _ = run(capsys, *args)
    assert code == 0
    doc = json.loads(out)
    assert doc["r_hat"][1][1] == 0
    assert trace.read_text().startswith("clock,event,i1,i2,k")
    assert run(capsys, *args)[1] == out


def test_matching(capsys):
    code, out, _ = run(capsys, "matching", "--alpha", "0.8", "--beta", "0.5", "--steps", "20000", "--seed", "1")
    doc = json.loads(out)
    assert code == 0 and doc["tv_to_geometric"] < 0.05
    code, out, _ = run(capsys, "matching", *SYM, "--steps", "1000", "--format", "csv")
    assert code == 0 and out.startswith("k,prob")
    code, _, err = run(capsys, "matching", "--alpha", "0.4", "--beta", "0.5", "--steps", "10")
    assert code == 2 and "transient" in err


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "40,80", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["n"] for r in rows] == ["40", "80"]
    assert float(rows[1]["tv_k_geometric"]) < float(rows[0]["tv_k_geometric"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nsystem", "fluid", *SYM], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["stable"] is True
