"""Reference impedance model (outer loop) and desired joint trajectories.

The reference state ``(theta_r, theta_r_dot)`` obeys a diagonal
mass-damper-spring relative to the desired trajectory::

    M_r (thdd_r - thdd_d) + B_r (thd_r - thd_d) + K_r (th_r - th_d) = tau_d - J^T f_e
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ContractError, DomainError, NumericError
from .numerics import rk4_step


def _diag_vector(name, values, n=None):
    a = np.atleast_1d(np.asarray(values, dtype=float))
    if a.ndim == 2:
        if a.shape[0] != a.shape[1] or np.any(a - np.diag(np.diag(a))):
            raise ConfigError(name, "must be diagonal")
        a = np.diag(a).copy()
    if n is not None and a.size == 1 and n > 1:
        a = np.full(n, float(a[0]))
    if n is not None and a.size != n:
        raise ConfigError(name, f"expected {n} entries, got {a.size}")
    return a


@dataclass(frozen=True)
class ImpedanceParams:
    """Diagonal desired inertia ``M_r``, damping ``B_r``, stiffness ``K_r`` and torque ``tau_d``.

    Diagonals are stored as vectors; full matrices are accepted if diagonal.
    """

    M_r: np.ndarray
    B_r: np.ndarray
    K_r: np.ndarray
    tau_d: np.ndarray

    def __post_init__(self):
        n = _diag_vector("impedance.M_r", self.M_r).size
        for name in ("M_r", "B_r", "K_r"):
            v = _diag_vector(f"impedance.{name}", getattr(self, name), n)
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ConfigError(f"impedance.{name}", "diagonal entries must be finite and > 0")
            object.__setattr__(self, name, v)
        tau_d = _diag_vector("impedance.tau_d", self.tau_d, n)
        if not np.all(np.isfinite(tau_d)):
            raise ConfigError("impedance.tau_d", "must be finite")
        object.__setattr__(self, "tau_d", tau_d)

    @classmethod
    def default(cls, n):
        """``M_r = I``, ``B_r = 20 I``, ``K_r = I``, ``tau_d = 0``."""
        return cls(np.ones(n), np.full(n, 20.0), np.ones(n), np.zeros(n))

    @property
    def n(self):
        return self.M_r.size


@dataclass(frozen=True)
class ReferenceState:
    theta_r: np.ndarray
    theta_r_dot: np.ndarray


def _generalized_force(J, f_e, n):
    J = np.asarray(J, dtype=float)
    f_e = np.asarray(f_e, dtype=float)
    if J.shape != (6, n) or f_e.shape != (6,):
        raise ContractError(f"expected J of shape (6, {n}) and f_e of shape (6,), got {J.shape}, {f_e.shape}")
    return J.T @ f_e


def reference_accel(imp, ref, des, f_e, J):
    """Reference acceleration ``thdd_r`` for the given desired point and wrench."""
    theta_d, theta_d_dot, theta_d_ddot = (np.asarray(v, dtype=float) for v in des)
    n = imp.n
    if any(np.shape(v) != (n,) for v in (ref.theta_r, ref.theta_r_dot, theta_d, theta_d_dot, theta_d_ddot)):
        raise ContractError(f"reference and desired vectors must have length {n}")
    jtf = _generalized_force(J, f_e, n)
    return (
        (imp.tau_d - jtf) / imp.M_r
        + theta_d_ddot
        - imp.B_r / imp.M_r * (ref.theta_r_dot - theta_d_dot)
        - imp.K_r / imp.M_r * (ref.theta_r - theta_d)
    )


def step_reference(imp, ref, des, f_e, J, dt, t=0.0):
    """One RK4 step of the reference model.

    The wrench and the desired acceleration are held over the step; desired
    position and velocity are propagated consistently with that acceleration,
    so with no wrench a reference that starts on the desired trajectory stays
    on it.
    """
    n = imp.n
    theta_d, theta_d_dot, theta_d_ddot = (np.asarray(v, dtype=float) for v in des)
    jtf = _generalized_force(J, f_e, n)
    forcing = (imp.tau_d - jtf) / imp.M_r
    b = imp.B_r / imp.M_r
    k = imp.K_r / imp.M_r

    def deriv(tau, x):
        th_d = theta_d + theta_d_dot * tau + 0.5 * theta_d_ddot * tau**2
        thd_d = theta_d_dot + theta_d_ddot * tau
        pos, vel = x[:n], x[n:]
        acc = forcing + theta_d_ddot - b * (vel - thd_d) - k * (pos - th_d)
        return np.concatenate((vel, acc))

    x0 = np.concatenate((np.asarray(ref.theta_r, dtype=float), np.asarray(ref.theta_r_dot, dtype=float)))
    try:
        x1 = rk4_step(deriv, x0, 0.0, dt)
    except NumericError as exc:
        raise NumericError("reference model produced a non-finite state", t=t) from exc
    if not np.all(np.isfinite(x1)):
        raise NumericError("reference model produced a non-finite state", t=t)
    return ReferenceState(x1[:n], x1[n:])


def steady_state_offset(imp, tau_d, J_transpose_fe):
    """Settled ``theta_r - theta_d`` under constant inputs: ``K_r^-1 (tau_d - J^T f_e)``."""
    return (np.asarray(tau_d, dtype=float) - np.asarray(J_transpose_fe, dtype=float)) / imp.K_r


# ---------------------------------------------------------------------------
# desired trajectories


@dataclass(frozen=True)
class JointSignal:
    """One joint's desired signal.

    ``constant``: ``value``.
    ``sinusoid``: ``value + amplitude * sin(omega * t / t_f)``.
    ``smoothed``: ``value + amplitude * sin(omega t) (1 - exp(-omega t)(1 + omega t))``.
    """

    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "smoothed"):
            raise ConfigError("trajectory.kind", f"unknown signal kind {self.kind!r}")
        for name in ("value", "amplitude", "omega"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"trajectory.{name}", "must be finite")


@dataclass(frozen=True)
class TrajectorySpec:
    joints: tuple
    t_f: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.t_f) and self.t_f > 0):
            raise ConfigError("trajectory.t_f", "must be > 0")
        object.__setattr__(self, "joints", tuple(self.joints))

    @property
    def n(self):
        return len(self.joints)


def _signal(sig, t, t_f):
    if sig.kind == "constant":
        return sig.value, 0.0, 0.0
    if sig.kind == "sinusoid":
        w = sig.omega / t_f
        a = sig.amplitude
        return sig.value + a * np.sin(w * t), a * w * np.cos(w * t), -a * w * w * np.sin(w * t)
    w, a = sig.omega, sig.amplitude
    s, c = np.sin(w * t), np.cos(w * t)
    e = np.exp(-w * t)
    g = 1.0 - e * (1.0 + w * t)
    g1 = w * w * t * e
    g2 = w * w * e * (1.0 - w * t)
    return (
        sig.value + a * s * g,
        a * (w * c * g + s * g1),
        a * (-w * w * s * g + 2.0 * w * c * g1 + s * g2),
    )


def desired_point(spec, t):
    """Desired ``(theta_d, theta_d_dot, theta_d_ddot)`` at time ``t`` >= 0."""
    if not (np.isfinite(t) and t >= 0):
        raise DomainError(f"t must be finite and >= 0, got {t!r}")
    vals = np.array([_signal(sig, t, spec.t_f) for sig in spec.joints], dtype=float)
    return vals[:, 0], vals[:, 1], vals[:, 2]
