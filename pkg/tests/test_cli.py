import json
import subprocess
import sys

import numpy as np
import pytest

from capstokes import cli
from capstokes.report import read_trajectory_csv

SMALL = {"grid": {"L": 16, "N": 128}, "profile": {"family": "gaussian", "a": 0.2, "w": 1.0},
         "T": 0.3, "n_outputs": 4}


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_simulate_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, "sim.json", SMALL)
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert "H^1.75" in capsys.readouterr().out
    for name in ("trajectory.csv", "summary.json", "profiles.png", "norms.png"):
        assert (out / name).is_file()
    nodes, times, prof = read_trajectory_csv(out / "trajectory.csv")
    assert nodes.size == 128 and np.allclose(times, [0.0, 0.1, 0.2, 0.3])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["norm_nonincreasing"] is True
    assert summary["norm_trail"][-1] < summary["norm_trail"][0]


def test_flat_trajectory_is_constant(tmp_path):
    cfg = write(tmp_path, "flat.json", {**SMALL, "profile": {"family": "flat"}})
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    _, _, prof = read_trajectory_csv(tmp_path / "o" / "trajectory.csv")
    assert np.all(prof == 0.0)


def test_quiet_suppresses_output(tmp_path, capsys):
    cfg = write(tmp_path, "sim.json", SMALL)
    cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"])
    assert capsys.readouterr().out == ""


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {"grid": {"L": 16, "N": 7}})
    assert cli.main(["simulate", "--config", cfg]) == 2
    assert "grid.N" in capsys.readouterr().err


def test_run_failure_exit_1_with_diagnostics(tmp_path):
    cfg = write(tmp_path, "c.json", {**SMALL, "contamination": 1e-12})
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out), "--quiet"]) == 1
    diag = json.loads((out / "failure.json").read_text())
    assert diag["error"] == "ContaminationError" and "t" in diag["diagnostics"]


def test_unknown_suite_exit_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["verify", "--suite", "nonsense"])
    assert info.value.code == 2


def test_verify_geometry_flat(tmp_path):
    cfg = write(tmp_path, "v.json", {"verify": {"profile": "flat", "N": 256}})
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", cfg, "--suite", "geometry", "--out", str(out), "--quiet"]) == 0
    recs = json.loads((out / "verify.json").read_text())
    assert [r["identity_id"] for r in recs] == ["geometry"] and recs[0]["residual_l2"] == 0.0


def test_verify_violated_bound_exit_1(tmp_path):
    cfg = write(tmp_path, "v.json", {"verify": {"N": 256, "bounds": {"comder": 1e-12}}})
    assert cli.main(["verify", "--config", cfg, "--suite", "comder", "--out", str(tmp_path / "v"),
                     "--quiet"]) == 1


def test_verify_all_standard(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["verify", "--out", str(out), "--quiet"]) == 0
    recs = json.loads((out / "verify.json").read_text())
    assert len(recs) == 15 and all(r["passed"] for r in recs)
    assert (out / "verify.png").is_file()


def test_sweep(tmp_path, capsys):
    cfg = write(tmp_path, "s.json", {**SMALL, "T": 0.1, "n_outputs": 3, "mu_plus_list": [0.05, 0.1]})
    out = tmp_path / "s"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert "fitted slope" in capsys.readouterr().out
    rep = json.loads((out / "sweep.json").read_text())
    assert len(rep["errors"]) == 2 and rep["slope"] is not None
    for name in rep["trajectories"].values():
        assert (out / name).is_file()
    assert (out / "trajectory_baseline.csv").is_file()


def test_sweep_requires_list(tmp_path, capsys):
    assert cli.main(["sweep", "--config", write(tmp_path, "a.json", SMALL)]) == 2
    assert "mu_plus_list" in capsys.readouterr().err
    assert cli.main(["sweep", "--config", write(tmp_path, "b.json", {**SMALL, "mu_plus_list": []})]) == 2


def test_fields(tmp_path):
    cfg = write(tmp_path, "f.json", {**SMALL, "grid": {"L": 16, "N": 512},
                                     "point_grid": {"x1": [-2, 2, 10], "x2": [-3, -0.5, 10]},
                                     "points": [[0.0, 0.2]]})
    out = tmp_path / "f"
    assert cli.main(["fields", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    lines = (out / "fields.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,v1,v2,p,residual,status"
    rows = [ln.split(",") for ln in lines[1:]]
    assert rows[0][-1] == "rejected_near_interface" and rows[0][2] == ""
    ok = [r for r in rows if r[-1] == "ok"]
    assert len(ok) == 100
    assert max(float(r[5]) for r in ok) <= 1e-5


def test_fields_flat_zero(tmp_path):
    cfg = write(tmp_path, "f.json", {**SMALL, "profile": {"family": "flat"}, "points": [[0.0, -1.0]]})
    out = tmp_path / "f"
    assert cli.main(["fields", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    row = (out / "fields.csv").read_text().splitlines()[1].split(",")
    assert [float(v) for v in row[2:5]] == [0.0, 0.0, 0.0]


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CAPSTOKES_THREADS", "-2")
    cfg = write(tmp_path, "s.json", {**SMALL, "mu_plus_list": [0.1]})
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "capstokes", "verify", "--suite", "geometry",
                        "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout
