import csv
import io
import json
import subprocess
import sys

import pytest

from lp_lab.cli import EXIT_CAPACITY, EXIT_OK, EXIT_USAGE, run


@pytest.fixture
def graph_file(tmp_path):
    code, text = run(["gen", "-n", "8", "-m", "6", "-d", "3", "--seed", "2"])
    assert code == EXIT_OK
    path = tmp_path / "g.json"
    path.write_text(text)
    return str(path)


def test_calkin_beta():
    code, text = run(["calkin", "beta", "-d", "3"])
    assert code == EXIT_OK
    assert abs(json.loads(text)["beta_d"] - 0.8895) <= 1e-3


def test_gen_alist(tmp_path):
    code, text = run(["gen", "-n", "8", "-m", "6", "-d", "3", "--format", "alist"])
    assert code == EXIT_OK and text.splitlines()[0] == "8 6"
    path = tmp_path / "g.alist"
    path.write_text(text)
    code, out = run(["diag", str(path)])
    assert code == EXIT_OK and json.loads(out)["n"] == 8


def test_decode_all_ones(graph_file):
    code, text = run(["decode", graph_file, "--gamma", ",".join(["1"] * 8), "--ml"])
    assert code == EXIT_OK
    res = json.loads(text)
    assert res["status"] == "success" and res["ml_unique_zero"] is True


def test_decode_failure_reports_case(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(run(["gen", "--kind", "check-regular", "-n", "3", "-m", "1", "-d", "3"])[1])
    res = json.loads(run(["decode", str(path), "--y", "100"])[1])
    assert res["status"] == "failure" and res["case"] == "tie"


def test_witness_modes(graph_file):
    for mode in ("find", "narrow", "acyclic"):
        code, text = run(["witness", graph_file, "--y", "10000000", "--mode", mode])
        assert code == EXIT_OK
        res = json.loads(text)
        if res["found"]:
            assert res["valid"]


def test_sim_wer_zero(graph_file):
    code, text = run(["sim", "wer", graph_file, "--epsilon", "0", "--trials", "20", "--format", "csv"])
    assert code == EXIT_OK
    row = next(csv.DictReader(io.StringIO(text)))
    assert float(row["wer"]) == 0.0 and row["failures"] == "0"


def test_threshold_rows(graph_file):
    code, text = run(["sim", "threshold", graph_file, "--grid", "0.05,0.1", "--trials", "20", "-k", "4", "--format", "csv"])
    assert code == EXIT_OK
    assert len(text.splitlines()) == 1 + 2 * 2
    assert run(["sim", "threshold", graph_file, "-k", "2"])[0] == EXIT_USAGE


def test_usage_errors(graph_file):
    assert run(["--bogus"])[0] == EXIT_USAGE
    assert run([])[0] == EXIT_USAGE
    assert run(["decode", "/nonexistent.json"])[0] == EXIT_USAGE
    assert run(["decode", graph_file, "--gamma", "1,1"])[0] == EXIT_USAGE


def test_capacity_exit_code(capsys):
    assert run(["calkin", "eigen", "-n", "20"])[0] == EXIT_CAPACITY
    assert "capacity" in capsys.readouterr().err


def test_manifest_replay_is_byte_identical(graph_file, tmp_path):
    out = tmp_path / "scan.csv"
    argv = ["sim", "threshold", graph_file, "--grid", "0.05,0.2", "--trials", "30", "--format", "csv", "--seed", "5", "-o", str(out)]
    assert run(argv)[0] == EXIT_OK
    first = out.read_bytes()
    man = json.loads((tmp_path / "scan.csv.manifest.json").read_text())
    assert man["seed"] == 5 and man["graphs"][0]["sha256"]
    out.unlink()
    assert run(["--replay", str(tmp_path / "scan.csv.manifest.json")])[0] == EXIT_OK
    assert out.read_bytes() == first


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lp_lab.cli", "calkin", "beta", "-d", "4"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert abs(json.loads(proc.stdout)["beta_d"] - 0.967) <= 1e-3
