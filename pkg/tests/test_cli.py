import json
import subprocess
import sys

import jsonschema
import pytest

from isosolitons import cli, outputs


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    return outputs.read_csv(path)


def test_solve_flat_decay(tmp_path, capsys):
    assert run("solve", "--case", "flat", "--c", -1, "--a1", 1, "--out-dir", tmp_path, "--plot") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    jsonschema.validate(summary, json.loads(outputs.schema_path().read_text()))
    assert summary["classification"] == "DecayToZero"
    table = rows(tmp_path / "trajectory.csv")
    assert tuple(table[0]) == outputs.TRAJECTORY_COLUMNS
    assert (tmp_path / "solution.png").stat().st_size > 0
    assert "DecayToZero" in capsys.readouterr().out


def test_solve_bs_a_decay(tmp_path):
    assert run("solve", "--case", "bs-a", "--lambda", 1, "--a1", 0.5, "--out-dir", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["classification"] == "DecayToZero" and summary["params"]["b"] == 1.0


def test_solve_trivial(tmp_path):
    assert run("solve", "--case", "flat", "--c", 0, "--a1", 0, "--out-dir", tmp_path, "--format", "json") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["residual_max"] == 0.0
    traj = json.loads((tmp_path / "trajectory.json").read_text())
    assert all(v == 0.0 for v in traj["u"])


def test_solve_output_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("solve", "--case", "bs-b", "--a1", 0.3, "--rmax", 30, "--out-dir", tmp_path / d) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_solve_usage_errors(tmp_path):
    assert run("solve", "--case", "cy", "--a1", 1, "--out-dir", tmp_path) == 1
    assert run("solve", "--case", "flat", "--a1", "x") == 1
    assert run("solve", "--case", "flat", "--a1", 1, "--tol", -1, "--out-dir", tmp_path) == 1
    assert run("solve", "--case", "bs-a", "--lambda", 0, "--a1", 1, "--out-dir", tmp_path) == 1


def test_solve_numerical_failure_writes_diagnostic(tmp_path):
    assert run("solve", "--case", "bs-a", "--lambda", 1e-4, "--a1", 1, "--out-dir", tmp_path) == 2
    diag = json.loads((tmp_path / "error.json").read_text())
    assert diag["error"] == "SeriesDomainError"


@pytest.mark.parametrize("cs,label", [((-2, -1, 0), "DecayToZero"), ((0.5, 1, 2), "Blowup")])
def test_sweep_flat(tmp_path, cs, label):
    assert run("sweep", "--case", "flat", "--c-values", *cs, "--a1-values", 1, "--workers", 2,
               "--out-dir", tmp_path) == 0
    table = rows(tmp_path / "sweep.csv")
    assert tuple(table[0]) == outputs.SWEEP_COLUMNS
    assert [r[0] for r in table[1:]] == ["0", "1", "2"]
    assert [float(r[2]) for r in table[1:]] == [float(c) for c in cs]
    assert all(r[5] == label for r in table[1:])


def test_sweep_empty_grid(tmp_path):
    assert run("sweep", "--case", "flat", "--c-values", "--out-dir", tmp_path) == 0
    assert rows(tmp_path / "sweep.csv") == [list(outputs.SWEEP_COLUMNS)]


def test_sweep_records_failures_in_row(tmp_path):
    assert run("sweep", "--case", "bs-a", "--lambda-values", 1e-4, 1, "--a1-values", 1,
               "--rmax", 60, "--out-dir", tmp_path, "--format", "json") == 0
    data = json.loads((tmp_path / "sweep.json").read_text())
    assert data[0]["error"].startswith("SeriesDomainError") and data[0]["classification"] == ""
    assert data[1]["error"] == "" and data[1]["classification"] == "DecayToZero"


def _config(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_flow_cy_circle(tmp_path):
    cfg = _config(tmp_path, {"topology": "circle", "background": "cy", "n_nodes": 64, "t_end": 12.0,
                             "snapshot_every": 4.0, "initial": {"kind": "sine", "offset": 0.5}})
    out = tmp_path / "out"
    assert run("flow", "--config", cfg, "--out-dir", out, "--plot") == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["final_sup_dev_from_mean"] < 1e-4 and rep["t_final"] == pytest.approx(12.0)
    snaps = sorted(out.glob("snapshot_*.csv"))
    assert len(snaps) == 4
    assert tuple(rows(snaps[0])[0]) == outputs.SNAPSHOT_COLUMNS
    assert (out / "flow.png").exists()


def test_flow_cfl_violation(tmp_path, capsys):
    cfg = _config(tmp_path, {"topology": "circle", "background": "cy", "n_nodes": 64, "dt": 0.5,
                             "initial": {"kind": "sine"}})
    assert run("flow", "--config", cfg, "--out-dir", tmp_path / "o") == 1
    assert "exceeds" in capsys.readouterr().err


def test_flow_config_parse_error_has_line_context(tmp_path, capsys):
    cfg = _config(tmp_path, '{\n  "topology": "circle",\n  "t_end": 1.0,,\n}\n')
    assert run("flow", "--config", cfg) == 1
    err = capsys.readouterr().err
    assert ":3:" in err and '"t_end": 1.0,,' in err
    cfg = _config(tmp_path, {"topology": "circle", "colour": "red"}, "b.json")
    assert run("flow", "--config", cfg) == 1
    assert run("flow", "--config", tmp_path / "missing.json") == 1


def test_verify_geometry_passes(tmp_path, capsys):
    assert run("verify", "--suite", "geometry", "--out-dir", tmp_path) == 0
    table = json.loads((tmp_path / "verify.json").read_text())
    assert table and all(row["passed"] for row in table)
    assert "PASS" in capsys.readouterr().out


def test_verify_failure_exit_code(monkeypatch):
    from isosolitons import verification
    monkeypatch.setitem(verification.SUITES, "series",
                        lambda: [verification.Check("forced", False, 1.0, 0.0)])
    assert run("verify", "--suite", "series") == 3


def test_module_entry_point_and_exit_codes(tmp_path):
    base = [sys.executable, "-m", "isosolitons"]
    ok = subprocess.run(base + ["--version"], capture_output=True, text=True)
    assert ok.returncode == 0 and ok.stdout.strip() == "0.1.0"
    bad = subprocess.run(base + ["solve", "--case", "nowhere", "--a1", "1"], capture_output=True, text=True)
    assert bad.returncode == 1
    num = subprocess.run(base + ["solve", "--case", "bs-b", "--lambda", "1e-4", "--a1", "2",
                                 "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert num.returncode == 2 and "numerical failure" in num.stderr
    ver = subprocess.run(base + ["verify", "--suite", "series"], capture_output=True, text=True)
    assert ver.returncode == 0
    helptext = subprocess.run(base + ["solve", "--help"], capture_output=True, text=True).stdout
    assert "1e-3" in helptext and "1e6" in helptext
