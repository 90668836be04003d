import csv
import io
import json
import subprocess
import sys

import pytest

from ftlab.cli import EXIT_CODES, main
from ftlab.runs import CSV_COLUMNS

pytestmark = pytest.mark.filterwarnings("ignore:Solution may be inaccurate")


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _error(err):
    line = err.strip().splitlines()[-1]
    return json.loads(line)


def test_exit_code_table():
    assert EXIT_CODES == {"ok": 0, "usage": 2, "ft_failure": 3, "infeasible": 4, "invalid_input": 5,
                          "io": 6, "budget": 7, "degenerate_fit": 8}


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["run", "--shots", "many"], ["tables", "toric"]])
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 2 and _error(err)["error"] == "usage"


def test_run_is_deterministic(capsys, tmp_path):
    argv = ["run", "--labels", "SPAM1f", "--preset", "H1-2", "--shots", "30", "--seed", "5"]
    code, first, _ = _run(capsys, *argv, "--json", str(tmp_path / "r.json"))
    assert code == 0
    _, second, _ = _run(capsys, *argv)
    assert first == second
    rows = list(csv.DictReader(io.StringIO(first)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r["basis"] for r in rows] == ["X", "Z"] and all(r["shots"] == "120" for r in rows)
    js = json.loads((tmp_path / "r.json").read_text())
    assert js[0]["label"] == "SPAM1f" and js[0]["noise"] == "H1-2"


def test_run_noiseless_is_perfect(capsys):
    code, out, _ = _run(capsys, "run", "--labels", "QEC2c", "--shots", "3", "--families", "Z")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["fidelity"]) == 1.0 and row["noise"] == "noiseless"


def test_run_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"labels": ["SPAM1c"], "shots": 4, "seed": 1, "families": ["X"],
                               "noise": {"p_tq": 0.01, "name": "mine"}}))
    code, out, _ = _run(capsys, "run", "--config", str(cfg))
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["label"] == "SPAM1c" and row["noise"] == "mine"


@pytest.mark.parametrize("argv,kind", [
    (["run", "--labels", "CNOT9z"], "invalid_input"),
    (["run", "--labels", "SPAM1f", "--preset", "bogus"], "invalid_input"),
    (["run", "--labels", "SPAM1f", "--shots", "0"], "invalid_input"),
    (["run", "--noise-file", "/nonexistent/noise.json"], "io"),
    (["bound", "/nonexistent/data.json"], "io"),
    (["verify-ft", "CNOT9z"], "invalid_input"),
])
def test_input_errors(capsys, argv, kind):
    code, _, err = _run(capsys, *argv)
    e = _error(err)
    assert e["error"] == kind and code == e["exit"] == EXIT_CODES[kind]


def test_bound_all_ones(capsys, tmp_path):
    f = tmp_path / "d.json"
    f.write_text(json.dumps({"per_basis": {"X": [1, 0], "Z": [1, 0], "Bell": [1, 0]}}))
    code, out, _ = _run(capsys, "bound", str(f))
    b = json.loads(out)
    assert code == 0 and b["lo"] == pytest.approx(1, abs=1e-6) and b["hi"] == pytest.approx(1, abs=1e-6)


def test_bound_infeasible(capsys, tmp_path):
    f = tmp_path / "d.json"
    f.write_text(json.dumps({"per_basis": {"X": [1, 0], "Z": [1, 0], "Bell": [0.9, 0]}}))
    code, _, err = _run(capsys, "bound", str(f))
    assert code == 4 and "widen" in _error(err)["message"]


def test_bound_malformed(capsys, tmp_path):
    f = tmp_path / "d.json"
    f.write_text("{not json")
    code, _, _ = _run(capsys, "bound", str(f))
    assert code == 5


def test_verify_ft_passing_and_witness(capsys):
    code, out, _ = _run(capsys, "verify-ft", "SPAM2f", "--rows", "0")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["ft_claimed"]
    code, out, _ = _run(capsys, "verify-ft", "SPAM1f", "--stop-at-first")
    rep = json.loads(out)
    assert code == 0 and not rep["ft_claimed"] and not rep["passed"]


def test_verify_ft_budget(capsys):
    code, _, err = _run(capsys, "verify-ft", "SPAM1f", "--rows", "0", "--max-branches", "1")
    assert code == 7 and _error(err)["error"] == "budget"


def test_fit_degenerate_and_resolved(capsys, tmp_path):
    f = tmp_path / "m.json"
    f.write_text(json.dumps({"measured": {"SPAM1f:Z": 1.0}}))
    code, out, _ = _run(capsys, "fit", str(f), "--grid", "0.2,0.3", "--shots", "5")
    assert code == 8 and json.loads(out)["degenerate"]
    f.write_text(json.dumps({"measured": {"SPAM1f:X": 0.99}}))
    code, out, _ = _run(capsys, "fit", str(f), "--grid", "0.2:0.4:0.1", "--shots", "20")
    r = json.loads(out)
    assert code == 0 and len(r["residuals"]) == 3 and r["nu"] in (0.2, 0.3, 0.4)


def test_scale(capsys):
    code, out, _ = _run(capsys, "scale", "--lambdas", "1,0", "--labels", "SPAM1f", "--family", "X",
                        "--shots", "20")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["lambda"] for r in rows] == ["0", "1"]
    assert float(rows[0]["error"]) == 0.0


def test_tables(capsys, tmp_path):
    code, out, _ = _run(capsys, "tables", "five_qubit")
    t = json.loads(out)
    assert code == 0 and len(t["entries"]) == 16 and t["entries"]["0000"] == "+IIIII"
    code, _, _ = _run(capsys, "tables", "steane_flag", "--json", str(tmp_path / "t.json"))
    assert code == 0 and "flagged" in json.loads((tmp_path / "t.json").read_text())


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ftlab.cli", "tables", "joint"], capture_output=True, text=True)
    assert r.returncode == 0 and len(json.loads(r.stdout)["entries"]) == 256
