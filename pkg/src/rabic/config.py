"""Scenario configuration: YAML schema, validation, presets and hashes.

A scenario file has the sections ``robot``, ``contact`` (optional),
``trajectory``, ``controller``, ``disturbance`` (optional) and ``sim``. See
``presets/*.yaml`` for complete examples. Units are SI throughout: m, kg,
kg m^2, s, rad, N, N m.

Numeric fields may be written as plain numbers or as multiples of pi
(``"0.3*pi"``, ``"2*pi/20"``, ``"pi"``).
"""

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .contact import ContactModel
from .controller import GainSet, PdGains
from .dynamics import RobotModel
from .estimator import EstimatorConfig
from .exceptions import ConfigError
from .reference import ImpedanceParams, JointSignal, TrajectorySpec, desired_point

PRESET_DIR = Path(__file__).parent / "presets"

_PI_RE = re.compile(r"^\s*([-+])?\s*((?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_number(value, where):
    """Float from a number or a ``"a*pi/b"`` string."""
    if isinstance(value, bool):
        raise ConfigError(where, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            sign = -1.0 if m.group(1) == "-" else 1.0
            a = float(m.group(2)) if m.group(2) else 1.0
            b = float(m.group(3)) if m.group(3) else 1.0
            return sign * a * np.pi / b
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(where, f"expected a number, got {value!r}")


def _numbers(value, where):
    if isinstance(value, (list, tuple)):
        return [parse_number(v, f"{where}[{i}]") for i, v in enumerate(value)]
    return parse_number(value, where)


def _section(raw, key, where=None, required=True):
    where = where or key
    val = raw.get(key) if isinstance(raw, dict) else None
    if val is None:
        if required:
            raise ConfigError(where, "missing section")
        return None
    if not isinstance(val, dict):
        raise ConfigError(where, "must be a mapping")
    return val


def _reject_unknown(sec, allowed, where):
    extra = set(sec) - set(allowed)
    if extra:
        raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown key")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Per-joint disturbance torque ``tau_u`` and wrench-measurement noise.

    Joint entries are ``zero``, ``constant`` (``value``), ``sinusoid``
    (``value + amplitude sin(omega t)``) or ``noise`` (Gaussian with standard
    deviation ``amplitude``, drawn from the seeded generator each step).
    """

    joints: tuple = ()
    wrench_noise_std: float = 0.0

    def torque(self, t, n, rng):
        out = np.zeros(n)
        for i, d in enumerate(self.joints):
            kind = d["kind"]
            if kind == "constant":
                out[i] = d["value"]
            elif kind == "sinusoid":
                out[i] = d["value"] + d["amplitude"] * np.sin(d["omega"] * t)
            elif kind == "noise":
                out[i] = d["amplitude"] * rng.standard_normal()
        return out

    @property
    def random(self):
        return self.wrench_noise_std > 0 or any(d["kind"] == "noise" for d in self.joints)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    robot: RobotModel
    contact: object
    trajectory: TrajectorySpec
    controller: str
    pd: object
    gains: object
    impedance: object
    estimator: object
    disturbance: DisturbanceSpec
    duration: float
    dt: float
    seed: int
    theta0: np.ndarray
    theta_dot0: np.ndarray
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def n(self):
        return self.robot.n

    @property
    def steps(self):
        return int(round(self.duration / self.dt))

    @property
    def config_hash(self):
        return _digest(self.raw)

    @property
    def geometry_hash(self):
        sim = self.raw.get("sim", {})
        keys = {
            "robot": self.raw.get("robot"),
            "contact": self.raw.get("contact"),
            "trajectory": self.raw.get("trajectory"),
            "duration": sim.get("duration"),
            "dt": sim.get("dt", 0.001),
            "initial": sim.get("initial"),
        }
        return _digest(keys)


def _digest(obj):
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# section parsers


def _parse_robot(sec):
    _reject_unknown(sec, ("links", "base", "gravity", "in_plane_gravity", "friction"), "robot")
    links = _section(sec, "links", "robot.links")
    _reject_unknown(links, ("mass", "length", "com", "inertia"), "robot.links")
    kw = {}
    for key, name in (("mass", "link_mass"), ("length", "link_length"), ("com", "link_com"), ("inertia", "link_inertia")):
        if key not in links:
            raise ConfigError(f"robot.links.{key}", "missing")
        vals = _numbers(links[key], f"robot.links.{key}")
        if not isinstance(vals, list):
            raise ConfigError(f"robot.links.{key}", "expected a list")
        for i, v in enumerate(vals):
            if key != "com" and v <= 0:
                raise ConfigError(f"robot.links.{key}[{i}]", f"must be > 0, got {v}")
        kw[name] = vals
    base = _section(sec, "base", "robot.base", required=False)
    if base is not None:
        _reject_unknown(base, ("wheel_radius", "half_track", "mass", "inertia", "mount_offset"), "robot.base")
        kw["n_b"] = 2
        for key, name in (
            ("wheel_radius", "wheel_radius"),
            ("half_track", "half_track"),
            ("mass", "base_mass"),
            ("inertia", "base_inertia"),
            ("mount_offset", "mount_offset"),
        ):
            if key in base:
                kw[name] = parse_number(base[key], f"robot.base.{key}")
    if "gravity" in sec:
        kw["gravity"] = parse_number(sec["gravity"], "robot.gravity")
    if "in_plane_gravity" in sec:
        kw["in_plane_gravity"] = bool(sec["in_plane_gravity"])
    if sec.get("friction") is not None:
        kw["friction"] = _numbers(sec["friction"], "robot.friction")
    return RobotModel(**kw)


def _parse_contact(sec):
    if sec is None:
        return None
    allowed = (
        "kind", "center", "half_extents", "point", "normal", "stiffness", "damping", "friction",
        "mass", "pushable", "push_axis", "ground_friction", "gravity", "slip_velocity",
    )
    _reject_unknown(sec, allowed, "contact")
    kw = {}
    for key in allowed:
        if key not in sec:
            continue
        v = sec[key]
        if key == "kind":
            kw[key] = str(v)
        elif key == "pushable":
            kw[key] = bool(v)
        elif key == "push_axis":
            kw[key] = int(v)
        elif key in ("center", "half_extents", "point", "normal"):
            vals = _numbers(v, f"contact.{key}")
            if not isinstance(vals, list) or len(vals) != 2:
                raise ConfigError(f"contact.{key}", "expected two numbers")
            kw[key] = tuple(vals)
        else:
            kw[key] = parse_number(v, f"contact.{key}")
    return ContactModel(**kw)


def _parse_trajectory(sec, n):
    _reject_unknown(sec, ("t_f", "joints"), "trajectory")
    joints = sec.get("joints")
    if not isinstance(joints, list) or len(joints) != n:
        raise ConfigError("trajectory.joints", f"expected a list of {n} joint signals")
    sigs = []
    for i, j in enumerate(joints):
        where = f"trajectory.joints[{i}]"
        if not isinstance(j, dict):
            j = {"kind": "constant", "value": j}
        _reject_unknown(j, ("kind", "value", "amplitude", "omega"), where)
        kw = {k: parse_number(j[k], f"{where}.{k}") for k in ("value", "amplitude", "omega") if k in j}
        try:
            sigs.append(JointSignal(kind=str(j.get("kind", "constant")), **kw))
        except ConfigError as exc:
            raise ConfigError(where, str(exc)) from exc
    return TrajectorySpec(joints=sigs, t_f=parse_number(sec.get("t_f", 1.0), "trajectory.t_f"))


def _parse_pd(sec, n):
    if sec is None:
        return None
    _reject_unknown(sec, ("kp", "kd"), "controller.pd")
    vals = {}
    for k in ("kp", "kd"):
        if k not in sec:
            raise ConfigError(f"controller.pd.{k}", "missing")
        v = _numbers(sec[k], f"controller.pd.{k}")
        if np.ndim(v) == 0:
            v = [v] * n
        if len(v) != n:
            raise ConfigError(f"controller.pd.{k}", f"expected {n} entries, got {len(v)}")
        vals[k] = v
    try:
        return PdGains(**vals)
    except ConfigError as exc:
        raise ConfigError(f"controller.{exc.field}", str(exc).split(": ", 1)[-1]) from exc


def _parse_rabic(sec, n):
    if sec is None:
        return None, None, None
    _reject_unknown(sec, ("gains", "impedance", "estimator"), "controller.rabic")
    g = _section(sec, "gains", "controller.rabic.gains")
    _reject_unknown(g, ("k1", "k2", "l", "mu", "D_hat", "sign_smoothing_eps", "xi1_guard_eps"), "controller.rabic.gains")
    kw = {k: _numbers(g[k], f"controller.rabic.gains.{k}") for k in g}
    for k in ("k1", "k2"):
        if k not in kw:
            raise ConfigError(f"controller.rabic.gains.{k}", "missing")
        if np.ndim(kw[k]) == 0:
            kw[k] = [kw[k]] * n
    try:
        gains = GainSet(**kw)
    except ConfigError as exc:
        raise ConfigError(f"controller.rabic.{exc.field}", str(exc).split(": ", 1)[-1]) from exc
    if gains.n != n:
        raise ConfigError("controller.rabic.gains.k1", f"expected {n} entries, got {gains.n}")

    imp = sec.get("impedance") or {}
    _reject_unknown(imp, ("M_r", "B_r", "K_r", "tau_d"), "controller.rabic.impedance")
    defaults = ImpedanceParams.default(n)
    vals = {}
    for k in ("M_r", "B_r", "K_r", "tau_d"):
        v = _numbers(imp[k], f"controller.rabic.impedance.{k}") if k in imp else getattr(defaults, k)
        v = np.broadcast_to(np.asarray(v, dtype=float), (n,)) if np.ndim(v) == 0 else v
        vals[k] = v
    try:
        impedance = ImpedanceParams(**vals)
        if impedance.n != n:
            raise ConfigError("impedance.M_r", f"expected {n} entries")
    except ConfigError as exc:
        raise ConfigError(f"controller.rabic.{exc.field}", str(exc).split(": ", 1)[-1]) from exc

    est = sec.get("estimator") or {}
    _reject_unknown(est, ("l1", "l2", "rho_phi", "sigma_phi", "rho_psi", "sigma_psi"), "controller.rabic.estimator")
    ekw = {}
    for k, v in est.items():
        ekw[k] = int(v) if k in ("l1", "l2") else _numbers(v, f"controller.rabic.estimator.{k}")
    try:
        estimator = EstimatorConfig(n=n, **ekw)
    except ConfigError as exc:
        raise ConfigError(f"controller.rabic.{exc.field}", str(exc).split(": ", 1)[-1]) from exc
    return gains, impedance, estimator


def _parse_disturbance(sec, n):
    if sec is None:
        return DisturbanceSpec(joints=tuple({"kind": "zero"} for _ in range(n)))
    _reject_unknown(sec, ("joints", "wrench_noise_std"), "disturbance")
    joints = sec.get("joints") or [{"kind": "zero"}] * n
    if len(joints) != n:
        raise ConfigError("disturbance.joints", f"expected {n} entries, got {len(joints)}")
    out = []
    for i, j in enumerate(joints):
        where = f"disturbance.joints[{i}]"
        _reject_unknown(j, ("kind", "value", "amplitude", "omega"), where)
        kind = str(j.get("kind", "zero"))
        if kind not in ("zero", "constant", "sinusoid", "noise"):
            raise ConfigError(f"{where}.kind", f"unknown disturbance kind {kind!r}")
        d = {"kind": kind}
        for k in ("value", "amplitude", "omega"):
            d[k] = parse_number(j.get(k, 0.0), f"{where}.{k}")
        if kind == "noise" and d["amplitude"] < 0:
            raise ConfigError(f"{where}.amplitude", "noise std must be >= 0")
        out.append(d)
    std = parse_number(sec.get("wrench_noise_std", 0.0), "disturbance.wrench_noise_std")
    if std < 0:
        raise ConfigError("disturbance.wrench_noise_std", "must be >= 0")
    return DisturbanceSpec(joints=tuple(out), wrench_noise_std=std)


def parse_config(raw, name="scenario"):
    """Validate a raw mapping and build a :class:`ScenarioConfig`.

    Raises
    ------
    ConfigError
        With the dotted path of the first offending field.
    """
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    raw = copy.deepcopy(raw)
    _reject_unknown(raw, ("name", "robot", "contact", "trajectory", "controller", "disturbance", "sim"), "<root>")
    robot = _parse_robot(_section(raw, "robot"))
    n = robot.n
    contact = _parse_contact(_section(raw, "contact", required=False))
    trajectory = _parse_trajectory(_section(raw, "trajectory"), n)

    ctl = _section(raw, "controller")
    _reject_unknown(ctl, ("kind", "pd", "rabic"), "controller")
    kind = str(ctl.get("kind", "rabic"))
    if kind not in ("pd", "rabic"):
        raise ConfigError("controller.kind", f"must be 'pd' or 'rabic', got {kind!r}")
    pd = _parse_pd(_section(ctl, "pd", "controller.pd", required=False), n)
    gains, impedance, estimator = _parse_rabic(_section(ctl, "rabic", "controller.rabic", required=False), n)
    if kind == "pd" and pd is None:
        raise ConfigError("controller.pd", "missing section for the selected controller")
    if kind == "rabic" and gains is None:
        raise ConfigError("controller.rabic", "missing section for the selected controller")

    disturbance = _parse_disturbance(_section(raw, "disturbance", required=False), n)

    sim = _section(raw, "sim")
    _reject_unknown(sim, ("duration", "dt", "seed", "initial"), "sim")
    dt = parse_number(sim.get("dt", 0.001), "sim.dt")
    if not (np.isfinite(dt) and dt > 0):
        raise ConfigError("sim.dt", "must be > 0")
    if "duration" not in sim:
        raise ConfigError("sim.duration", "missing")
    duration = parse_number(sim["duration"], "sim.duration")
    if not duration >= dt * (1 - 1e-9):
        raise ConfigError("sim.duration", f"must be >= dt ({dt})")
    seed = sim.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("sim.seed", "must be a nonnegative integer")
    init = sim.get("initial") or {}
    _reject_unknown(init, ("theta", "theta_dot"), "sim.initial")
    theta0 = _initial(init, "theta", n, trajectory)
    theta_dot0 = _initial(init, "theta_dot", n, trajectory)
    return ScenarioConfig(
        name=str(raw.get("name", name)),
        robot=robot,
        contact=contact,
        trajectory=trajectory,
        controller=kind,
        pd=pd,
        gains=gains,
        impedance=impedance,
        estimator=estimator,
        disturbance=disturbance,
        duration=duration,
        dt=dt,
        seed=seed,
        theta0=theta0,
        theta_dot0=theta_dot0,
        raw=raw,
    )


def _initial(init, key, n, trajectory):
    # default: start on the desired trajectory at rest
    if key not in init:
        if key == "theta":
            return desired_point(trajectory, 0.0)[0]
        return np.zeros(n)
    v = _numbers(init[key], f"sim.initial.{key}")
    v = np.full(n, v) if np.ndim(v) == 0 else np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ConfigError(f"sim.initial.{key}", f"expected {n} entries")
    return v


# ---------------------------------------------------------------------------
# loading, presets, overrides


def preset_names():
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def resolve_config_path(spec):
    """Path for a file name, a bare preset name, or ``presets/<name>``."""
    p = Path(spec)
    if p.is_file():
        return p
    stem = p.name[:-5] if p.name.endswith(".yaml") else p.name
    if (p.parent == Path(".") or p.parent.name == "presets") and (PRESET_DIR / f"{stem}.yaml").is_file():
        return PRESET_DIR / f"{stem}.yaml"
    raise ConfigError("<path>", f"no config file or preset named {spec!r}")


def load_raw(spec):
    path = resolve_config_path(spec)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<yaml>", f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("<root>", f"{path}: config must be a mapping")
    raw.setdefault("name", path.stem)
    return raw


def load_config(spec, controller=None, seed=None, dt=None):
    """Load, override and validate a scenario by path or preset name."""
    return parse_config(apply_overrides(load_raw(spec), controller=controller, seed=seed, dt=dt))


def apply_overrides(raw, controller=None, seed=None, dt=None):
    raw = copy.deepcopy(raw)
    if controller is not None:
        raw.setdefault("controller", {})["kind"] = controller
    if seed is not None:
        raw.setdefault("sim", {})["seed"] = int(seed)
    if dt is not None:
        raw.setdefault("sim", {})["dt"] = float(dt)
    return raw


def set_param(raw, path, value):
    """Copy of ``raw`` with the dotted ``path`` set to ``value``.

    The path must already exist. A scalar written over a list is broadcast to
    the list's length, so ``controller.rabic.impedance.K_r = 10`` sets every
    joint.
    """
    raw = copy.deepcopy(raw)
    keys = path.split(".")
    node = raw
    for k in keys[:-1]:
        if isinstance(node, list) and k.isdigit() and int(k) < len(node):
            node = node[int(k)]
        elif isinstance(node, dict) and k in node and isinstance(node[k], (dict, list)):
            node = node[k]
        else:
            raise ConfigError(path, "parameter path does not resolve")
    last = keys[-1]
    if isinstance(node, list) and last.isdigit() and int(last) < len(node):
        node[int(last)] = value
        return raw
    if not isinstance(node, dict) or last not in node:
        raise ConfigError(path, "parameter path does not resolve")
    old = node[last]
    if isinstance(old, list) and not isinstance(value, list):
        value = [value] * len(old)
    node[last] = value
    return raw
