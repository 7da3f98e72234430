import json
import subprocess
import sys

import pytest

from bdlab.cli import EXIT_CONFIG, EXIT_OK, main
from bdlab.config import ConfigError, load_config, parse_config
from bdlab.experiment import convergence_study, run_experiment


def test_linear_disk_solve_writes_mode_table(tmp_path):
    out = tmp_path / "run"
    assert main(["solve", "--config", "linear-disk", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "ok"
    rows = report["tables"]["mode_decay"]
    assert [r["k"] for r in rows] == [1, 2, 3]
    for r in rows:
        assert r["rel_error"] <= 0.03
    assert parse_config(report["config_text"]) == load_config("linear-disk")
    assert (out / "trajectory.csv").read_text().startswith("t,x1,x2,on_boundary,value\n")
    assert "run" in json.loads((out / "timing.json").read_text())


def test_invalid_config_writes_nothing(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[coefficients]\nLambda = 0.5\n")
    out = tmp_path / "never"
    assert main(["solve", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_module_entry_point(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nn_r = many\n")
    proc = subprocess.run(
        [sys.executable, "-m", "bdlab", "verify", "--config", str(bad), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_CONFIG
    assert "grid.n_r" in proc.stderr


def test_failed_check_sets_status(tmp_path):
    cfg = load_config("default").replace("verification", rho=0.95)
    report = run_experiment(cfg, tmp_path, command="verify")
    assert not report.ok
    assert report.errors[0]["check_id"] == "CACC1"
    assert json.loads((tmp_path / "report.json").read_text())["status"] == "error"


def test_halfspace_solve_tables(tmp_path):
    report = run_experiment(load_config("linear-halfspace"), tmp_path)
    assert report.ok
    assert report.tables["error"]["sup_error"] <= 2e-3
    assert report.tables["compatibility"]["ratio"] > 0


def test_nonlinear_solve_tables():
    report = run_experiment(load_config("nonlinear-disk"))
    fp = report.tables["fixed_point"]
    assert max(fp["contraction_ratios"]) <= 0.9
    assert report.tables["positivity"]["violated"] is False
    assert report.tables["error"]["sup_error"] <= 2e-3


def test_disk_convergence_order(tmp_path):
    report = convergence_study(load_config("disk-convergence"), 3, out_dir=tmp_path)
    table = report.tables["convergence"]
    assert table["fitted_order"] >= 1.8
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert lines[0] == "level,h,tau,error" and len(lines) == 4


def test_nonlinear_convergence_monotone():
    table = convergence_study(load_config("nonlinear-disk"), 2).tables["convergence"]
    assert table["monotone"]


def test_convergence_depth_checked(tmp_path):
    with pytest.raises(ConfigError, match="insufficient depth"):
        convergence_study(load_config("disk-convergence"), 1)
    assert main(["converge", "--config", "disk-convergence", "--out", str(tmp_path / "c"), "--depth", "1"]) == EXIT_CONFIG
    assert not (tmp_path / "c").exists()
