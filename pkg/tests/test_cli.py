import csv
import io
import json
import subprocess
import sys

import pytest

from ma_couple.cli import main
from ma_couple.records import RunRecord


def test_solve_converged(tmp_path):
    out = tmp_path / "s.json"
    assert main(["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["status"] == "converged" and doc["regime"] == "sublinear"
    assert doc["residuals"]["ode"] <= 1e-5
    rows = list(csv.DictReader(io.StringIO(out.with_suffix(".csv").read_text())))
    assert len(rows) == 2048
    assert float(rows[-1]["v1"]) == 0.0 and float(rows[-1]["t"]) == 1.0
    assert float(rows[0]["u1"]) == -float(rows[0]["v1"])


def test_solve_stdout_and_explicit_csv(tmp_path, capsys):
    csv_path = tmp_path / "p.csv"
    code = main(["solve", "--dim", "3", "--alpha", "2", "--beta", "8", "--grid", "256", "--csv", str(csv_path)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["regime"] == "superlinear" and doc["config"]["grid"] == 256
    assert csv_path.read_text().count("\n") == 257


def test_solve_nonexistence(tmp_path):
    out = tmp_path / "n.json"
    assert main(["solve", "--dim", "2", "--alpha", "4", "--beta", "1", "--out", str(out)]) == 2
    doc = json.loads(out.read_text())
    assert doc["status"] == "nonexistence_certified"
    assert doc["eigen"]["C"] > 1
    assert "balanced" in doc["verdict"] and "no radial convex solution" in doc["verdict"]
    assert not out.with_suffix(".csv").exists()


@pytest.mark.parametrize("argv", [
    ["solve", "--dim", "2", "--alpha", "0", "--beta", "1"],
    ["solve", "--dim", "1", "--alpha", "1", "--beta", "1"],
    ["solve", "--dim", "2", "--alpha", "x", "--beta", "1"],
    ["solve", "--dim", "2", "--alpha", "1"],
    ["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--grid", "4"],
    ["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--init", "cubic"],
    ["eigen", "--dim", "1", "--alpha", "1"],
    ["eigen", "--dim", "2", "--alpha", "-1"],
    ["sweep", "--dim", "2", "--alphas", "", "--betas", "1"],
    ["sweep", "--dim", "2", "--alphas", "1", "--betas", "1", "--jobs", "0"],
    ["bogus"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        sys.exit(main(argv))
    assert info.value.code == 64


def test_solve_max_iter_and_gate(tmp_path):
    assert main(["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--max-iter", "3",
                 "--out", str(tmp_path / "m.json")]) == 3
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["status"] == "max_iter_exceeded" and doc["norms"] is None


def test_solve_stamp_and_trace(tmp_path):
    out = tmp_path / "t.json"
    assert main(["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--grid", "128", "--stamp", "--trace",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc["timestamps"]) == {"started", "finished"}
    assert len(doc["trace"]) == doc["iterations"]


def test_eigen_cross_check(tmp_path):
    out = tmp_path / "e.json"
    assert main(["eigen", "--dim", "2", "--alpha", "2", "--cross-check", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["cross_check"]["relative_difference"] <= 1e-4
    assert doc["cross_check"]["passed"]


def test_eigen_bracket(tmp_path):
    out = tmp_path / "e1.json"
    assert main(["eigen", "--dim", "2", "--alpha", "1", "--cross-check", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["bracket"]["lower"] <= doc["eigen"]["C"] <= doc["bracket"]["upper"]
    assert doc["bracket"]["contains_C"]
    assert "skipped" in doc["cross_check"]
    assert doc["eigen"]["critical_radius"] > 1


def test_sweep_table(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["sweep", "--dim", "2", "--alphas", "0.5", "2", "8", "--betas", "0.5,2,8", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 9
    for r in rows:
        a, b = float(r["alpha"]), float(r["beta"])
        expected = "nonexistence_certified" if a * b == 4 else "converged"
        assert r["status"] == expected, r
        if expected == "converged":
            assert float(r["residual"]) <= 1e-5


def test_sweep_parallel_identical(tmp_path):
    paths = [tmp_path / "j1.csv", tmp_path / "j8.csv"]
    for jobs, path in zip((1, 8), paths):
        assert main(["sweep", "--dim", "3", "--alphas", "1,3,9", "--betas", "1,3", "--grid", "512",
                     "--jobs", str(jobs), "--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_grid_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MA_COUPLE_GRID", "300")
    out = tmp_path / "g.json"
    main(["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--out", str(out)])
    assert json.loads(out.read_text())["config"]["grid"] == 300


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    d = tmp_path_factory.mktemp("records")
    paths = {}
    for name, argv in {
        "sub": ["solve", "--dim", "2", "--alpha", "1", "--beta", "1"],
        "sup": ["solve", "--dim", "3", "--alpha", "4", "--beta", "8"],
        "none": ["solve", "--dim", "2", "--alpha", "4", "--beta", "1"],
        "eigen": ["eigen", "--dim", "2", "--alpha", "2", "--cross-check"],
    }.items():
        paths[name] = d / f"{name}.json"
        main(argv + ["--out", str(paths[name])])
    return paths


@pytest.mark.parametrize("name", ["sub", "sup", "none", "eigen"])
def test_verify_passes(solved, name, capsys):
    assert main(["verify", "--record", str(solved[name])]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_verify_tampered(solved, tmp_path, capsys):
    doc = json.loads(solved["sub"].read_text())
    doc["profiles"]["v1"][900] += 0.01
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify", "--record", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "FAIL  ode_residual" in out
    assert "failed gates:" in out and "ode_residual" in out.splitlines()[-1]


def test_verify_tampered_constant(solved, tmp_path, capsys):
    doc = json.loads(solved["none"].read_text())
    doc["eigen"]["C"] *= 1.01
    bad = tmp_path / "badC.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify", "--record", str(bad)]) == 1
    assert "FAIL  threshold_constant" in capsys.readouterr().out


def test_verify_io_errors(tmp_path):
    assert main(["verify", "--record", str(tmp_path / "missing.json")]) == 66
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert main(["verify", "--record", str(junk)]) == 65
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"schema_version": 1, "command": "solve"}))
    assert main(["verify", "--record", str(partial)]) == 65


def test_verify_failed_status(tmp_path):
    out = tmp_path / "m.json"
    main(["solve", "--dim", "2", "--alpha", "1", "--beta", "1", "--max-iter", "3", "--out", str(out)])
    assert main(["verify", "--record", str(out)]) == 1


def test_record_reloads(solved):
    text = solved["sub"].read_text()
    assert RunRecord.loads(text).dumps() == text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ma_couple", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ma-couple" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "ma_couple", "solve"], capture_output=True, text=True)
    assert proc.returncode == 64
