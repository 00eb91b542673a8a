import numpy as np
import pytest

from conftest import small_raw
from rabic.config import (
    load_config,
    load_raw,
    parse_config,
    parse_number,
    preset_names,
    resolve_config_path,
    set_param,
)
from rabic.exceptions import ConfigError


def test_parse_number_forms():
    assert parse_number(3, "x") == 3.0
    assert parse_number("0.3*pi", "x") == pytest.approx(0.3 * np.pi)
    assert parse_number("2*pi/20", "x") == pytest.approx(np.pi / 10)
    assert parse_number("pi", "x") == pytest.approx(np.pi)
    assert parse_number("-pi/2", "x") == pytest.approx(-np.pi / 2)
    assert parse_number("1e-3", "x") == 1e-3
    with pytest.raises(ConfigError):
        parse_number("three", "x")
    with pytest.raises(ConfigError):
        parse_number(True, "x")


def test_presets_load():
    assert {"nominal", "b-analog", "d-analog"} <= set(preset_names())
    for name in preset_names():
        cfg = load_config(name)
        assert cfg.n == cfg.robot.n == cfg.trajectory.n
        assert cfg.gains is not None and cfg.pd is not None


def test_preset_path_forms():
    assert resolve_config_path("presets/nominal") == resolve_config_path("nominal")
    assert resolve_config_path("nominal.yaml").name == "nominal.yaml"
    with pytest.raises(ConfigError):
        resolve_config_path("no-such-preset")


def test_overrides():
    cfg = load_config("nominal", controller="pd", seed=7, dt=0.002)
    assert (cfg.controller, cfg.seed, cfg.dt, cfg.steps) == ("pd", 7, 0.002, 2000)


def test_initial_state_defaults_to_desired():
    cfg = parse_config(small_raw())
    np.testing.assert_allclose(cfg.theta0, [0.0, 0.5])
    np.testing.assert_array_equal(cfg.theta_dot0, 0.0)


@pytest.mark.parametrize(
    "path,value,field",
    [
        ("robot.links.mass", [1.0, -2.0], "robot.links.mass[1]"),
        ("robot.links.com", [0.25, 0.9], "robot.link_com[1]"),
        ("sim.dt", 0, "sim.dt"),
        ("sim.duration", 0.0001, "sim.duration"),
        ("sim.seed", -1, "sim.seed"),
        ("controller.kind", "lqr", "controller.kind"),
        ("controller.rabic.gains.l", 1.2, "controller.rabic.gains.l"),
        ("controller.rabic.gains.k2", [1.0], "controller.rabic.gains.k2"),
        ("controller.rabic.impedance.K_r", -1, "controller.rabic.impedance.K_r"),
        ("controller.rabic.estimator.sigma_phi", 0, "controller.rabic.estimator.sigma_phi"),
        ("controller.pd.kp", [1.0, 2.0, 3.0], "controller.pd.kp"),
    ],
)
def test_field_precise_errors(path, value, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(set_param(small_raw(), path, value))
    assert exc.value.field == field


def test_unknown_key_rejected():
    raw = small_raw()
    raw["robot"]["links"]["colour"] = "red"
    with pytest.raises(ConfigError) as exc:
        parse_config(raw)
    assert exc.value.field == "robot.links.colour"


def test_missing_controller_section():
    raw = small_raw()
    del raw["controller"]["pd"]
    with pytest.raises(ConfigError) as exc:
        parse_config(raw)
    assert exc.value.field == "controller.pd"


def test_base_requires_flat_gravity():
    raw = small_raw()
    raw["robot"]["base"] = {"wheel_radius": 0.1}
    raw["robot"]["in_plane_gravity"] = True
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_set_param():
    raw = small_raw()
    out = set_param(raw, "controller.rabic.impedance.K_r", 100)
    assert out["controller"]["rabic"]["impedance"]["K_r"] == 100
    out = set_param(raw, "controller.pd.kp", 5.0)
    assert out["controller"]["pd"]["kp"] == [5.0, 5.0]
    out = set_param(raw, "trajectory.joints.1.value", 0.2)
    assert out["trajectory"]["joints"][1]["value"] == 0.2
    assert raw["controller"]["pd"]["kp"] == [40.0, 30.0]
    with pytest.raises(ConfigError):
        set_param(raw, "controller.rabic.gains.k9", 1)


def test_hashes():
    a = parse_config(small_raw("pd"))
    b = parse_config(small_raw("rabic"))
    assert len(a.config_hash) == 16
    assert a.config_hash != b.config_hash
    assert a.geometry_hash == b.geometry_hash
    c = parse_config(set_param(small_raw(), "robot.links.mass", [1.0, 1.0]))
    assert c.geometry_hash != a.geometry_hash


def test_load_raw_keeps_name():
    assert load_raw("d-analog")["name"] == "d-analog"
