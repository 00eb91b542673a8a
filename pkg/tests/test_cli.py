import json
import subprocess
import sys
import time

import numpy as np
import pytest
import yaml

from conftest import small_raw
from rabic.cli import main
from rabic.config import set_param
from rabic.simulation import SimLog

WALL = {"kind": "wall", "point": [0.0, 0.3], "normal": [0.0, -1.0], "stiffness": 5000, "damping": 50, "friction": 0.5}


def write_cfg(path, raw):
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def no_temp_files(out):
    return not any(p.name.endswith(".tmp") for p in out.rglob("*"))


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    assert set(capsys.readouterr().out.split()) >= {"nominal", "b-analog", "d-analog"}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rabic", "presets"], capture_output=True, text=True)
    assert res.returncode == 0 and "nominal" in res.stdout


def test_run_d_analog_pd(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", "presets/d-analog", "--controller", "pd", "--out", str(out)]) == 0
    for name in ("log.csv", "metrics.txt", "metrics.json"):
        assert (out / name).is_file()
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["controller"] == "pd" and metrics["peak_force"] > 0
    assert no_temp_files(out)


def test_run_uses_environment_default(tmp_path, monkeypatch):
    monkeypatch.setenv("RABIC_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--config", write_cfg(tmp_path / "c.yaml", small_raw())]) == 0
    assert (tmp_path / "env" / "log.csv").is_file()


def test_run_overrides(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", small_raw("pd"))
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--controller", "rabic", "--dt", "0.002", "--seed", "5", "--out", str(out)]) == 0
    log = SimLog.from_csv(out / "log.csv")
    assert log.meta["controller"] == "rabic" and log.meta["seed"] == "5" and len(log) == 101


def test_negative_mass_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "bad.yaml", set_param(small_raw(), "robot.links.mass", [1.0, -0.5]))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "robot.links.mass[1]" in capsys.readouterr().err


def test_unstable_gains_exit_2_with_partial_log(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "unstable.yaml", set_param(small_raw("pd", duration=1.0), "controller.pd.kp", 1e6))
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 2
    assert "numeric abort" in capsys.readouterr().err
    log = SimLog.from_csv(out / "log.csv")
    assert 0 < len(log) < 1001
    assert not (out / "metrics.txt").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fly"],
        ["run"],
        ["run", "--config", "nominal", "--controller", "lqr"],
        ["run", "--config", "nominal", "--dt", "fast"],
        ["run", "--config", "does-not-exist"],
        ["sweep", "--config", "nominal", "--param", "sim.seed"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path):
    assert main(argv + (["--out", str(tmp_path)] if argv[:1] == ["run"] and len(argv) > 2 else [])) == 1


def test_compare_single_config(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", small_raw("rabic", duration=0.5, contact=WALL))
    out = tmp_path / "cmp"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    for name in ("log_a.csv", "log_b.csv", "comparison.txt", "comparison.json"):
        assert (out / name).is_file()
    report = json.loads((out / "comparison.json").read_text())
    assert "terminal_force_ratio" in report
    assert report["a.controller"] == "rabic" and report["b.controller"] == "pd"
    assert "terminal_force_ratio" in (out / "comparison.txt").read_text()


def test_compare_geometry_mismatch_exit_1(tmp_path):
    a = write_cfg(tmp_path / "a.yaml", small_raw())
    b = write_cfg(tmp_path / "b.yaml", set_param(small_raw(), "robot.links.length", [0.6, 0.4]))
    assert main(["compare", "--config", a, "--config", b, "--out", str(tmp_path / "o")]) == 1


def test_sweep_stiffness(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", small_raw("rabic"))
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--param", "controller.rabic.impedance.K_r", "--values", "1,10,100", "--out", str(out)]) == 0
    rows = (out / "sweep.tsv").read_text().strip().splitlines()
    assert len(rows) == 4
    table = json.loads((out / "sweep.json").read_text())
    assert [r["controller.rabic.impedance.K_r"] for r in table] == [1, 10, 100]
    assert all((out / f"run_{i:03d}" / "log.csv").is_file() for i in range(3))


def test_sweep_seeds_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", small_raw("pd"))
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--param", "sim.seed", "--values", "1,2", "--out", str(out)]) == 0
    a, b = json.loads((out / "sweep.json").read_text())
    keys = ("inner_rmse", "outer_rmse", "rms_torque_rate", "max_torque")
    assert all(a[k] == b[k] for k in keys)


def test_sweep_exponent_on_nominal(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--config", "nominal", "--param", "controller.rabic.gains.l", "--values", "0.6,0.8,0.999", "--out", str(out)])
    assert code == 0
    assert all(r["status"] == "ok" for r in json.loads((out / "sweep.json").read_text()))


def test_sweep_unresolvable_path_exit_1(tmp_path):
    code = main(["sweep", "--config", "nominal", "--param", "controller.rabic.gains.k7", "--values", "1", "--out", str(tmp_path)])
    assert code == 1


def test_sweep_invalid_value_exit_1(tmp_path):
    code = main(["sweep", "--config", "nominal", "--param", "sim.dt", "--values", "0.001,-1", "--out", str(tmp_path / "o")])
    assert code == 1
    assert not (tmp_path / "o" / "run_000").exists()


def test_sweep_divergence_exit_2(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", small_raw("pd", duration=0.5))
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--param", "controller.pd.kp", "--values", "40,1000000", "--out", str(out)]) == 2
    status = [r["status"] for r in json.loads((out / "sweep.json").read_text())]
    assert status == ["ok", "diverged"]


def test_check_passes_quickly(tmp_path, capsys):
    t0 = time.perf_counter()
    assert main(["check", "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - t0 < 30
    text = capsys.readouterr().out
    assert "FAIL" not in text and text.count("PASS") == 7
    assert (tmp_path / "check.txt").is_file()


def test_check_catches_injected_fault(capsys):
    assert main(["check"], fault="young-sign-flip") == 1
    out = capsys.readouterr().out
    assert "FAIL young-inequality" in out and "q1=" in out


def test_exit_codes_are_documented_set(tmp_path):
    codes = {
        main(["presets"]),
        main(["run", "--config", "missing"]),
        main(["bogus"]),
    }
    assert codes <= {0, 1, 2}
