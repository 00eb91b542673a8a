"""Fixed-step closed-loop engine, CSV logging, metrics and run comparison.

One step of length ``dt`` at time ``t_k``:

1. desired point ``(theta_d, theta_d_dot, theta_d_ddot)`` at ``t_k``;
2. contact wrench from the current end-effector state;
3. error coordinates, regressor and estimator output (RABIC), or the PD law;
4. controller torque, then a log row for ``t_k``;
5. estimator update, reference-model step (RABIC);
6. RK4 plant step with torque, disturbance and wrench held over the step;
7. pushable obstacle step.

The final sample ``t_N`` is logged too, so a run has ``N + 1`` rows.
"""

import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .contact import ObstacleState, contact_forces, step_obstacle
from .controller import error_coords, pd_torque, rabic_torque
from .dynamics import (
    base_velocity,
    compute_terms,
    end_effector_state,
    forward_dynamics,
    potential_energy,
    total_energy,
)
from .estimator import (
    advance_integral,
    build_regressor,
    init_estimator,
    predict_uncertainty,
    update_phi,
    update_psi,
)
from .exceptions import ContractError, NumericError, SimulationDiverged
from .numerics import rk4_step
from .reference import ReferenceState, desired_point, step_reference

LOG_VERSION = "v1"
BLOWUP_LIMIT = 1e9
TERMINAL_FRACTION = 0.2

_PER_JOINT = (
    "theta", "theta_dot", "theta_d", "theta_r", "tau", "tau_u", "s", "xi1", "xi2", "phi_norm", "psi",
)


def log_columns(n):
    """Column names of a run log for ``n`` generalized coordinates, in order."""
    cols = ["t"]
    for name in _PER_JOINT[:6]:
        cols += [f"{name}_{i}" for i in range(n)]
    cols += [f"fe_{i}" for i in range(6)]
    for name in _PER_JOINT[6:]:
        cols += [f"{name}_{i}" for i in range(n)]
    cols += ["energy", "work", "dissipation", "base_x", "base_y", "obstacle_offset"]
    return cols


@dataclass
class SimLog:
    """Fixed-rate run record.

    ``data`` has one row per sample and the columns of :func:`log_columns`.
    ``meta`` carries the config and geometry hashes, controller kind and sizes.
    """

    columns: list
    data: np.ndarray
    meta: dict

    def __len__(self):
        return self.data.shape[0]

    def col(self, name):
        return self.data[:, self.columns.index(name)]

    def block(self, prefix, width=None):
        """Columns ``prefix_0 .. prefix_{width-1}`` as an ``(rows, width)`` array."""
        width = int(self.meta["n"]) if width is None else width
        start = self.columns.index(f"{prefix}_0")
        return self.data[:, start : start + width]

    @property
    def t(self):
        return self.col("t")

    @property
    def dt(self):
        return float(self.meta["dt"])

    def contact_force(self):
        """Magnitude of the planar contact force [N] per row."""
        fe = self.block("fe", 6)
        return np.hypot(fe[:, 0], fe[:, 1])

    def to_csv(self, path):
        """Write atomically: a comment line with ``key=value`` metadata, the header, then rows."""
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in self.meta.items())
        buf.write(f"# rabic-log {LOG_VERSION} {meta}\n")
        buf.write(",".join(self.columns) + "\n")
        np.savetxt(buf, self.data, fmt="%.17g", delimiter=",")
        atomic_write_text(path, buf.getvalue())

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
            if not first.startswith("# rabic-log"):
                raise ContractError(f"{path}: not a run log")
            meta = dict(item.split("=", 1) for item in first.split()[3:])
            columns = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.size == 0:
            data = np.empty((0, len(columns)))
        if data.shape[1] != len(columns):
            raise ContractError(f"{path}: row width {data.shape[1]} does not match {len(columns)} columns")
        return cls(columns=columns, data=data, meta=meta)


def atomic_write_text(path, text):
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# engine


def run_scenario(cfg):
    """Run one closed-loop scenario and return its :class:`SimLog`.

    Raises
    ------
    SimulationDiverged
        When a state exceeds ``BLOWUP_LIMIT`` or a numeric failure occurs; the
        rows logged so far are attached as ``exc.log``.
    """
    model = cfg.robot
    n = model.n
    dt = cfg.dt
    steps = cfg.steps
    rabic = cfg.controller == "rabic"
    gains = cfg.gains
    rng = np.random.default_rng(cfg.seed)
    fr = np.asarray(model.friction)
    contact = cfg.contact

    columns = log_columns(n)
    rows = np.zeros((steps + 1, len(columns)))
    meta = {
        "name": cfg.name,
        "controller": cfg.controller,
        "config_hash": cfg.config_hash,
        "geometry_hash": cfg.geometry_hash,
        "n": n,
        "n_b": model.n_b,
        "dt": repr(dt),
        "seed": cfg.seed,
    }

    theta = cfg.theta0.astype(float).copy()
    theta_dot = cfg.theta_dot0.astype(float).copy()
    base_xy = np.zeros(2)
    work = dissipation = 0.0
    obstacle = ObstacleState()
    e0 = total_energy(model, theta, theta_dot)

    theta_d0, theta_d_dot0, _ = desired_point(cfg.trajectory, 0.0)
    ref = ReferenceState(theta_d0.copy(), theta_d_dot0.copy())
    est = None
    coords = None

    def partial(k):
        return SimLog(columns=columns, data=rows[:k].copy(), meta=meta)

    for k in range(steps + 1):
        t = k * dt
        try:
            des = desired_point(cfg.trajectory, t)
            terms = compute_terms(model, theta, theta_dot)
            pose, twist = end_effector_state(model, theta, theta_dot, base_xy)
            if contact is not None:
                f_e = contact_forces(contact, pose, twist, obstacle).wrench
            else:
                f_e = np.zeros(6)
            f_meas = f_e
            if cfg.disturbance.wrench_noise_std > 0:
                f_meas = f_e + cfg.disturbance.wrench_noise_std * rng.standard_normal(6)
            tau_dist = cfg.disturbance.torque(t, n, rng)

            target, target_dot = (ref.theta_r, ref.theta_r_dot) if rabic else (des[0], des[1])
            if gains is not None:
                if coords is None:
                    coords = error_coords(target, target_dot, theta, theta_dot, gains)
                else:
                    coords = error_coords(
                        target, target_dot, theta, theta_dot, gains, xi1_prev=coords.xi1, dt=dt, xi2_prev=coords.xi2
                    )
            if rabic:
                if est is None:
                    est = init_estimator(cfg.estimator, coords.xi2)
                else:
                    est = advance_integral(est, coords.xi2, dt)
                gamma = build_regressor(est, coords.xi2)
                tau_hat = predict_uncertainty(gamma, est.phi_hat)
                tau = rabic_torque(gains, coords, tau_hat, est.psi_hat)
            else:
                tau = pd_torque(cfg.pd, des[0], des[1], theta, theta_dot)
        except NumericError as exc:
            raise SimulationDiverged(str(exc), t=t, log=partial(k)) from exc

        row = rows[k]
        row[0] = t
        j = 1
        for block in (theta, theta_dot, des[0], target, tau, tau_dist - fr * theta_dot):
            row[j : j + n] = block
            j += n
        row[j : j + 6] = f_e
        j += 6
        if coords is not None:
            for block in (coords.s, coords.xi1, coords.xi2):
                row[j : j + n] = block
                j += n
        else:
            j += 3 * n
        if est is not None:
            row[j : j + n] = np.linalg.norm(est.phi_hat, axis=1)
            row[j + n : j + 2 * n] = est.psi_hat
        j += 2 * n
        row[j : j + 6] = (
            0.5 * theta_dot @ terms.D @ theta_dot + potential_energy(model, theta) - e0,
            work,
            dissipation,
            base_xy[0],
            base_xy[1],
            obstacle.offset,
        )
        if k == steps:
            break

        try:
            if rabic:
                est = update_phi(est, gamma, coords.s, cfg.estimator, dt)
                est = update_psi(est, coords.s, cfg.estimator, dt)
                ref = step_reference(cfg.impedance, ref, des, f_meas, terms.J_mm, dt, t=t)
            x = np.concatenate((theta, theta_dot, base_xy, (work, dissipation)))

            first_stage = [True]

            def deriv(_, x):
                th, thd = x[:n], x[n : 2 * n]
                friction = fr * thd
                # the first RK4 stage sits at the sampled state, whose terms are known
                stage = terms if first_stage[0] else compute_terms(model, th, thd)
                first_stage[0] = False
                acc = forward_dynamics(model, th, thd, tau, tau_dist - friction, f_e, terms=stage)
                out = np.empty_like(x)
                out[:n] = thd
                out[n : 2 * n] = acc
                out[2 * n : 2 * n + 2] = base_velocity(model, th, thd)
                # power injected by actuators and disturbance, and drawn by the contact
                out[2 * n + 2] = thd @ (tau + tau_dist - stage.J_mm.T @ f_e)
                out[2 * n + 3] = thd @ friction
                return out

            x = rk4_step(deriv, x, t, dt)
        except NumericError as exc:
            raise SimulationDiverged(str(exc), t=t, log=partial(k + 1)) from exc
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_LIMIT:
            raise SimulationDiverged("state exceeded the blow-up limit", t=t + dt, log=partial(k + 1))
        theta, theta_dot = x[:n], x[n : 2 * n]
        base_xy = x[2 * n : 2 * n + 2]
        work, dissipation = x[2 * n + 2], x[2 * n + 3]
        if contact is not None:
            obstacle = step_obstacle(contact, obstacle, f_e[contact.push_axis], dt)

    return SimLog(columns=columns, data=rows, meta=meta)



# ---------------------------------------------------------------------------
# metrics and comparison


@dataclass(frozen=True)
class Metrics:
    """Summary of one run (all values >= 0).

    ``rms_torque_rate`` is ``sqrt(mean over steps and joints of (dtau/dt)^2)``
    with ``dtau`` the one-step torque difference.
    """

    peak_force: float
    terminal_force: float
    inner_rmse: float
    outer_rmse: float
    rms_torque_rate: float
    max_torque: float

    def as_dict(self):
        return asdict(self)


def terminal_window(log, fraction=TERMINAL_FRACTION):
    """Row mask of the last ``fraction`` of the run."""
    t = log.t
    return t >= t[-1] - fraction * (t[-1] - t[0]) - 1e-12


def compute_metrics(log):
    if len(log) < 2:
        raise ContractError("torque rate is undefined for a log with fewer than two rows")
    force = log.contact_force()
    theta = log.block("theta")
    inner = np.linalg.norm(log.block("theta_r") - theta, axis=1)
    outer = np.linalg.norm(log.block("theta_d") - theta, axis=1)
    tau = log.block("tau")
    rate = np.diff(tau, axis=0) / log.dt
    return Metrics(
        peak_force=float(force.max()),
        terminal_force=float(force[terminal_window(log)].mean()),
        inner_rmse=float(np.sqrt(np.mean(inner**2))),
        outer_rmse=float(np.sqrt(np.mean(outer**2))),
        rms_torque_rate=float(np.sqrt(np.mean(rate**2))),
        max_torque=float(np.abs(tau).max()),
    )


@dataclass(frozen=True)
class ForceTrend:
    """Least-squares slope [N/s] and relative drop of the contact force over a final window."""

    slope: float
    drop: float
    mean: float

    @property
    def decreasing(self):
        """Negative slope with a fitted drop of at least 5% of the window mean."""
        return self.slope < 0 and self.mean > 0 and self.drop >= 0.05 * self.mean


def force_trend(log, window=1.0):
    t = log.t
    mask = t >= t[-1] - window - 1e-12
    f = log.contact_force()[mask]
    tw = t[mask]
    slope = float(np.polyfit(tw - tw[0], f, 1)[0]) if f.size > 1 and np.ptp(f) > 0 else 0.0
    return ForceTrend(slope=slope, drop=-slope * float(tw[-1] - tw[0]), mean=float(f.mean()))


def _ratio(a, b):
    if b == 0:
        return 1.0 if a == 0 else float("inf")
    return a / b


def compare_runs(log_a, log_b, windows=10):
    """Side-by-side metrics of two runs of the same geometry, ratios ``a / b``.

    Force ratios are ``None`` when neither run touched anything.
    """
    if log_a.meta.get("geometry_hash") != log_b.meta.get("geometry_hash"):
        raise ContractError("runs come from different scenario geometry")
    ma, mb = compute_metrics(log_a), compute_metrics(log_b)
    da, db = ma.as_dict(), mb.as_dict()
    no_contact = ma.peak_force == 0 and mb.peak_force == 0
    report = {"a.controller": log_a.meta.get("controller"), "b.controller": log_b.meta.get("controller")}
    for key in da:
        report[f"a.{key}"] = da[key]
        report[f"b.{key}"] = db[key]
    for key in da:
        force_key = key in ("peak_force", "terminal_force")
        report[f"ratio.{key}"] = None if (force_key and no_contact) else _ratio(da[key], db[key])
    report["terminal_force_ratio"] = report["ratio.terminal_force"]

    fa, fb = log_a.contact_force(), log_b.contact_force()
    edges = np.linspace(0, len(fa), windows + 1).astype(int)
    for w in range(windows):
        lo, hi = edges[w], edges[w + 1]
        a, b = float(fa[lo:hi].mean()), float(fb[lo:hi].mean())
        report[f"profile.{w}.t_end"] = float(log_a.t[hi - 1])
        report[f"profile.{w}.ratio"] = None if no_contact else _ratio(a, b)
    ta, tb = force_trend(log_a), force_trend(log_b)
    report["a.final_second_slope"] = ta.slope
    report["b.final_second_slope"] = tb.slope
    report["a.force_decreasing"] = ta.decreasing
    report["b.force_decreasing"] = tb.decreasing
    return report


def format_report(report):
    """Flat ``key = value`` text, one entry per line."""
    lines = []
    for key, val in report.items():
        if val is None:
            val = "n/a"
        elif isinstance(val, float):
            val = f"{val:.10g}"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def write_report(report, stem):
    """Write ``<stem>.txt`` and ``<stem>.json`` atomically with the same keys."""
    stem = Path(stem)
    atomic_write_text(stem.with_suffix(".txt"), format_report(report))
    clean = {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in report.items()}
    atomic_write_text(stem.with_suffix(".json"), json.dumps(clean, indent=2) + "\n")
