"""Euler-Lagrange model of a planar serial arm, optionally on a differential-drive base.

Conventions
-----------
* The arm moves in a plane with axes ``(x, y)``. When ``in_plane_gravity`` is
  set, gravity acts along ``+x`` so that ``theta = 0`` hangs straight down and
  the potential is ``V = -g * sum(m_i * x_com_i)``.
* Joint angles are relative; link ``i`` has absolute angle
  ``heading + theta_1 + ... + theta_i``.
* With a base (``n_b = 2``) the generalized coordinates are
  ``[theta_R, theta_L, theta_1, ..., theta_nm]``. The base rolls without slip
  on the horizontal plane, so the heading is
  ``r (theta_R - theta_L) / (2 b)`` and the base position ``(x, y)`` is an
  auxiliary, path-dependent state that the caller carries. In-plane gravity is
  not allowed with a base.

Internally the model is assembled on "full" coordinates
``q = [x, y, heading, theta_m]`` (or just ``theta_m`` for a fixed base), where
the inertia matrix comes from summing body Jacobians, and the result is
reduced through the rolling map ``qdot = S(q) thetadot``::

    D = S^T M S,   C = S^T M Sdot + S^T C_q S,   G = S^T G_q.

``C_q`` is built from Christoffel symbols of ``M``, which keeps ``Ddot - 2C``
skew-symmetric after the reduction.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import ConfigError, ContractError, NumericError

#: Condition number above which ``forward_dynamics`` refuses to solve.
MAX_CONDITION = 1e12

_PRISMATIC_X, _PRISMATIC_Y, _REVOLUTE = 0, 1, 2


def _as_tuple(name, values, n):
    try:
        out = tuple(float(v) for v in values)
    except TypeError as exc:
        raise ConfigError(name, "expected a list of numbers") from exc
    if len(out) != n:
        raise ConfigError(name, f"expected {n} entries, got {len(out)}")
    for i, v in enumerate(out):
        if not np.isfinite(v):
            raise ConfigError(f"{name}[{i}]", "must be finite")
    return out


@dataclass(frozen=True)
class RobotModel:
    """Kinematic and inertial parameters of the (mobile) planar manipulator.

    Lengths in m, masses in kg, inertias in kg m^2 (about the body centre of
    mass), viscous friction in N m s/rad per generalized coordinate.
    """

    link_mass: tuple
    link_length: tuple
    link_com: tuple
    link_inertia: tuple
    n_b: int = 0
    wheel_radius: float = 0.1
    half_track: float = 0.25
    base_mass: float = 20.0
    base_inertia: float = 1.0
    mount_offset: float = 0.0
    gravity: float = 9.81
    in_plane_gravity: bool = True
    friction: tuple = None

    def __post_init__(self):
        n_m = len(self.link_mass)
        if n_m < 1:
            raise ConfigError("robot.links.mass", "need at least one link")
        for name in ("link_mass", "link_length", "link_com", "link_inertia"):
            object.__setattr__(self, name, _as_tuple(f"robot.{name}", getattr(self, name), n_m))
        for name in ("link_mass", "link_length", "link_inertia"):
            for i, v in enumerate(getattr(self, name)):
                if v <= 0:
                    raise ConfigError(f"robot.{name}[{i}]", f"must be > 0, got {v}")
        for i, (c, ln) in enumerate(zip(self.link_com, self.link_length)):
            if not 0 < c <= ln:
                raise ConfigError(f"robot.link_com[{i}]", f"must lie in (0, {ln}], got {c}")
        if self.n_b not in (0, 2):
            raise ConfigError("robot.n_b", f"must be 0 or 2, got {self.n_b}")
        if self.n_b == 2:
            for name in ("wheel_radius", "half_track", "base_mass", "base_inertia"):
                if not getattr(self, name) > 0:
                    raise ConfigError(f"robot.base.{name}", "must be > 0")
            if self.in_plane_gravity and self.gravity != 0:
                raise ConfigError(
                    "robot.in_plane_gravity", "a wheeled base moves on the horizontal plane; disable it"
                )
        if self.gravity < 0:
            raise ConfigError("robot.gravity", "must be >= 0")
        n = self.n_b + n_m
        fr = (0.0,) * n if self.friction is None else _as_tuple("robot.friction", self.friction, n)
        if any(v < 0 for v in fr):
            raise ConfigError("robot.friction", "must be >= 0")
        object.__setattr__(self, "friction", fr)

    @property
    def n_m(self):
        return len(self.link_mass)

    @property
    def n(self):
        return self.n_b + self.n_m

    @property
    def g_in_plane(self):
        return self.gravity if self.in_plane_gravity else 0.0

    def heading(self, theta):
        """Base heading [rad] implied by the wheel angles (0 for a fixed base)."""
        if self.n_b == 0:
            return 0.0
        return self.wheel_radius * (theta[0] - theta[1]) / (2.0 * self.half_track)


@dataclass
class DynamicsTerms:
    """``D``, ``C``, ``G`` and the 6 x n coupled Jacobian ``J_mm = [J_b J_m]`` at one state."""

    D: np.ndarray
    C: np.ndarray
    G: np.ndarray
    J_mm: np.ndarray
    condition: float = 1.0
    n_b: int = 0

    @property
    def J_b(self):
        return self.J_mm[:, : self.n_b]

    @property
    def J_m(self):
        return self.J_mm[:, self.n_b :]


# ---------------------------------------------------------------------------
# full-coordinate chain


def _joint_types(model):
    return _joint_layout(model.n_b, model.n_m)[0]


@lru_cache(maxsize=None)
def _joint_layout(n_b, n_m):
    """Full-chain joint types and the indices of each type."""
    arm = [_REVOLUTE] * n_m
    types = np.array(arm if n_b == 0 else [_PRISMATIC_X, _PRISMATIC_Y, _REVOLUTE] + arm)
    return types, np.flatnonzero(types == _PRISMATIC_X), np.flatnonzero(types == _PRISMATIC_Y), np.flatnonzero(
        types == _REVOLUTE
    )


def _layout(types):
    n_b = 0 if types[0] == _REVOLUTE else 2
    return _joint_layout(n_b, types.size - (3 if n_b else 0))


def _full_coordinates(model, theta, base_xy):
    theta = np.asarray(theta, dtype=float)
    if model.n_b == 0:
        return theta.copy()
    return np.concatenate(([base_xy[0], base_xy[1], model.heading(theta)], theta[2:]))


def _selection(model, q):
    """Rolling map ``S`` with ``qdot = S thetadot`` and its heading derivative."""
    n, n_m = model.n, model.n_m
    if model.n_b == 0:
        return np.eye(n), np.zeros((n, n))
    r, b = model.wheel_radius, model.half_track
    c, s = np.cos(q[2]), np.sin(q[2])
    S = np.zeros((3 + n_m, n))
    S[0, :2] = 0.5 * r * c
    S[1, :2] = 0.5 * r * s
    S[2, 0] = r / (2 * b)
    S[2, 1] = -r / (2 * b)
    S[3:, 2:] = np.eye(n_m)
    dS_dh = np.zeros_like(S)
    dS_dh[0, :2] = -0.5 * r * s
    dS_dh[1, :2] = 0.5 * r * c
    return S, dS_dh


def _chain_geometry(model, q):
    """Joint axis points, body COM points and per-body data for the full chain.

    Returns ``(p_joint, bodies, p_ee, ee_angle)`` where ``bodies`` is a list
    of ``(last_index, mass, inertia, p_com)``.
    """
    n_f = q.size
    p_joint = np.full((n_f, 2), np.nan)
    bodies = []
    if model.n_b == 0:
        origin = np.zeros(2)
        angle = 0.0
        first = 0
    else:
        base = q[:2]
        heading = q[2]
        p_joint[2] = base
        bodies.append((2, model.base_mass, model.base_inertia, base.copy()))
        origin = base + model.mount_offset * np.array([np.cos(heading), np.sin(heading)])
        angle = heading
        first = 3
    p = origin
    for i in range(model.n_m):
        k = first + i
        p_joint[k] = p
        angle = angle + q[k]
        u = np.array([np.cos(angle), np.sin(angle)])
        bodies.append((k, model.link_mass[i], model.link_inertia[i], p + model.link_com[i] * u))
        p = p + model.link_length[i] * u
    return p_joint, bodies, p, angle


def _point_jacobian(types, p_joint, last, point):
    """2 x n_f linear and 1 x n_f angular Jacobian of a point rigidly attached at ``last``."""
    n_f = types.size
    Jv = np.zeros((2, n_f))
    Jw = np.zeros(n_f)
    _, px, py, rev = _layout(types)
    Jv[0, px[px <= last]] = 1.0
    Jv[1, py[py <= last]] = 1.0
    rev = rev[rev <= last]
    r = point - p_joint[rev]
    Jv[0, rev] = -r[:, 1]
    Jv[1, rev] = r[:, 0]
    Jw[rev] = 1.0
    return Jv, Jw


def _point_jacobian_derivative(types, p_joint, last, point):
    """``dJv[:, j, k] = d(column j)/d q_k`` for a point attached at ``last``."""
    n_f = types.size
    dJv = np.zeros((2, n_f, n_f))
    rev = _layout(types)[3]
    rev = rev[rev <= last]
    outer = np.maximum.outer(rev, rev)
    dJv[:, rev[:, None], rev[None, :]] = -np.moveaxis(point - p_joint[outer], -1, 0)
    return dJv


def _full_terms(model, q, qdot):
    """Full-coordinate ``M``, ``dM/dq``, Christoffel ``C_q``, ``G_q`` and EE Jacobian."""
    types = _joint_types(model)
    n_f = q.size
    p_joint, bodies, p_ee, _ = _chain_geometry(model, q)
    M = np.zeros((n_f, n_f))
    dM = np.zeros((n_f, n_f, n_f))
    G = np.zeros(n_f)
    g = model.g_in_plane
    for last, m, inertia, p_com in bodies:
        Jv, Jw = _point_jacobian(types, p_joint, last, p_com)
        dJv = _point_jacobian_derivative(types, p_joint, last, p_com)
        M += m * Jv.T @ Jv + inertia * np.outer(Jw, Jw)
        # d(Jv^T Jv)_{ij}/dq_k = dJv[:, i, k] . Jv[:, j] + Jv[:, i] . dJv[:, j, k]
        half = np.einsum("aik,aj->ijk", dJv, Jv)
        dM += m * (half + half.transpose(1, 0, 2))
        G -= g * m * Jv[0]
    # C_q[i, j] = sum_k 0.5 (dM[i,j,k] + dM[i,k,j] - dM[j,k,i]) qdot_k
    gamma = 0.5 * (dM + dM.transpose(0, 2, 1) - dM.transpose(2, 0, 1))
    C = gamma @ qdot
    Jv_ee, Jw_ee = _point_jacobian(types, p_joint, n_f - 1, p_ee)
    return M, C, G, Jv_ee, Jw_ee


def _check_dims(model, *vectors):
    out = []
    for v in vectors:
        a = np.asarray(v, dtype=float)
        if a.shape != (model.n,):
            raise ContractError(f"expected a vector of length {model.n}, got shape {a.shape}")
        out.append(a)
    return out


def compute_terms(model, theta, theta_dot):
    """Inertia, Coriolis, gravity and coupled Jacobian at ``(theta, theta_dot)``.

    Raises
    ------
    ContractError
        On a dimension mismatch.
    NumericError
        If ``D`` is not numerically positive definite.
    """
    theta, theta_dot = _check_dims(model, theta, theta_dot)
    q = _full_coordinates(model, theta, (0.0, 0.0))
    S, dS_dh = _selection(model, q)
    qdot = S @ theta_dot
    M, C_q, G_q, Jv_ee, Jw_ee = _full_terms(model, q, qdot)
    if model.n_b == 0:
        D, C, G = M, C_q, G_q
    else:
        S_dot = dS_dh * qdot[2]
        D = S.T @ M @ S
        C = S.T @ M @ S_dot + S.T @ C_q @ S
        G = S.T @ G_q
    D = 0.5 * (D + D.T)
    w = np.linalg.eigvalsh(D)
    if not np.all(np.isfinite(w)) or w[0] <= 0:
        raise NumericError("inertia matrix lost positive definiteness")
    J = np.zeros((6, model.n))
    J[0:2] = Jv_ee @ S
    J[5] = Jw_ee @ S
    return DynamicsTerms(D=D, C=C, G=G, J_mm=J, condition=float(w[-1] / w[0]), n_b=model.n_b)


def forward_dynamics(model, theta, theta_dot, tau_r, tau_u, f_e, terms=None):
    """Joint accelerations solving ``D thdd = tau_r + tau_u - C thd - G - J^T f_e``.

    ``f_e`` is the 6-vector wrench the end effector exerts on the environment.
    """
    tau_r, tau_u = _check_dims(model, tau_r, tau_u)
    f_e = np.asarray(f_e, dtype=float)
    if f_e.shape != (6,):
        raise ContractError(f"f_e must have shape (6,), got {f_e.shape}")
    if terms is None:
        terms = compute_terms(model, theta, theta_dot)
    if terms.condition > MAX_CONDITION:
        raise NumericError(f"inertia matrix ill-conditioned (cond={terms.condition:.3g})")
    rhs = tau_r + tau_u - terms.C @ np.asarray(theta_dot, dtype=float) - terms.G - terms.J_mm.T @ f_e
    return np.linalg.solve(terms.D, rhs)


def base_velocity(model, theta, theta_dot):
    """World-frame velocity ``(xdot, ydot)`` of the base origin [m/s]."""
    if model.n_b == 0:
        return np.zeros(2)
    h = model.heading(theta)
    v = 0.5 * model.wheel_radius * (theta_dot[0] + theta_dot[1])
    return np.array([v * np.cos(h), v * np.sin(h)])


def end_effector_state(model, theta, theta_dot, base_xy=(0.0, 0.0)):
    """Planar end-effector pose ``(x, y, angle)`` and twist ``(vx, vy, omega)``."""
    theta, theta_dot = _check_dims(model, theta, theta_dot)
    q = _full_coordinates(model, theta, base_xy)
    S, _ = _selection(model, q)
    types = _joint_types(model)
    p_joint, _, p_ee, angle = _chain_geometry(model, q)
    Jv, Jw = _point_jacobian(types, p_joint, q.size - 1, p_ee)
    qdot = S @ theta_dot
    pose = np.array([p_ee[0], p_ee[1], angle])
    velocity = np.array([*(Jv @ qdot), Jw @ qdot])
    return pose, velocity


def link_points(model, theta, base_xy=(0.0, 0.0)):
    """Joint positions followed by the end-effector position, shape ``(n_m + 1, 2)``."""
    q = _full_coordinates(model, np.asarray(theta, dtype=float), base_xy)
    p_joint, _, p_ee, _ = _chain_geometry(model, q)
    first = 0 if model.n_b == 0 else 3
    return np.vstack((p_joint[first:], p_ee))


def potential_energy(model, theta):
    if model.g_in_plane == 0:
        return 0.0
    q = _full_coordinates(model, np.asarray(theta, dtype=float), (0.0, 0.0))
    _, bodies, _, _ = _chain_geometry(model, q)
    return float(-model.g_in_plane * sum(m * p[0] for _, m, _, p in bodies))


def total_energy(model, theta, theta_dot):
    """Kinetic ``0.5 thd^T D thd`` plus potential energy [J]."""
    theta, theta_dot = _check_dims(model, theta, theta_dot)
    D = compute_terms(model, theta, theta_dot).D
    return float(0.5 * theta_dot @ D @ theta_dot + potential_energy(model, theta))
