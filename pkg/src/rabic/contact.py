"""Compliant penalty contact between the end-effector point and one obstacle.

Sign convention: the returned wrench ``f_e`` is the force the end effector
exerts *on the environment*, matching the ``+ J^T f_e`` term on the left side
of the manipulator equation. The environment pushes back with ``-f_e``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError


@dataclass(frozen=True)
class ContactModel:
    """Obstacle geometry and contact law parameters.

    ``kind="box"``: axis-aligned rectangle with ``center`` and ``half_extents``
    [m]. A ``pushable`` box slides along ``push_axis`` (0 = x, 1 = y) against
    Coulomb ground friction. ``kind="wall"``: half-plane through ``point`` whose
    free side is along the unit ``normal``.
    """

    kind: str = "box"
    center: tuple = (1.0, 0.0)
    half_extents: tuple = (0.1, 0.1)
    point: tuple = (1.0, 0.0)
    normal: tuple = (-1.0, 0.0)
    stiffness: float = 1e4
    damping: float = 50.0
    friction: float = 0.9
    mass: float = 20.0
    pushable: bool = False
    push_axis: int = 0
    ground_friction: float = None
    gravity: float = 9.81
    slip_velocity: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("box", "wall"):
            raise ConfigError("contact.kind", f"must be 'box' or 'wall', got {self.kind!r}")
        if not self.stiffness > 0:
            raise ConfigError("contact.stiffness", "must be > 0")
        if self.damping < 0:
            raise ConfigError("contact.damping", "must be >= 0")
        if self.friction < 0:
            raise ConfigError("contact.friction", "must be >= 0")
        if not self.mass > 0:
            raise ConfigError("contact.mass", "must be > 0")
        if not self.slip_velocity > 0:
            raise ConfigError("contact.slip_velocity", "must be > 0")
        if self.push_axis not in (0, 1):
            raise ConfigError("contact.push_axis", "must be 0 or 1")
        if self.kind == "box" and any(h <= 0 for h in self.half_extents):
            raise ConfigError("contact.half_extents", "must be > 0")
        if self.kind == "wall":
            nrm = float(np.hypot(*self.normal))
            if nrm == 0:
                raise ConfigError("contact.normal", "must be nonzero")
            object.__setattr__(self, "normal", tuple(float(v) / nrm for v in self.normal))
            if self.pushable:
                raise ConfigError("contact.pushable", "a wall cannot be pushable")
        if self.ground_friction is None:
            object.__setattr__(self, "ground_friction", self.friction)
        elif self.ground_friction < 0:
            raise ConfigError("contact.ground_friction", "must be >= 0")


@dataclass(frozen=True)
class ObstacleState:
    """Displacement [m] and velocity [m/s] of a pushable box along its push axis."""

    offset: float = 0.0
    velocity: float = 0.0


@dataclass(frozen=True)
class ContactResult:
    wrench: np.ndarray
    normal_force: float
    tangential_force: float
    penetration: float
    normal: np.ndarray


def _zero_result():
    return ContactResult(np.zeros(6), 0.0, 0.0, 0.0, np.zeros(2))


def _penetration(contact, p, obstacle):
    """Penetration depth and outward normal at the point ``p``, or ``(0, None)``."""
    if contact.kind == "wall":
        n = np.asarray(contact.normal)
        depth = -float((p - np.asarray(contact.point)) @ n)
        return (depth, n) if depth > 0 else (0.0, None)
    c = np.array(contact.center, dtype=float)
    c[contact.push_axis] += obstacle.offset
    h = np.asarray(contact.half_extents, dtype=float)
    d = p - c
    if np.any(np.abs(d) >= h):
        return 0.0, None
    depths = np.array([h[0] - d[0], h[0] + d[0], h[1] - d[1], h[1] + d[1]])
    normals = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))
    k = int(np.argmin(depths))
    return float(depths[k]), np.array(normals[k])


def contact_forces(contact, ee_pose, ee_velocity, obstacle=ObstacleState()):
    """Full contact evaluation; see :func:`contact_wrench` for the wrench alone."""
    p = np.asarray(ee_pose, dtype=float)[:2]
    depth, n = _penetration(contact, p, obstacle)
    if n is None:
        return _zero_result()
    v = np.asarray(ee_velocity, dtype=float)[:2].copy()
    if contact.kind == "box" and contact.pushable:
        v[contact.push_axis] -= obstacle.velocity
    depth_rate = -float(v @ n)
    fn = max(0.0, contact.stiffness * depth + contact.damping * depth_rate)
    t = np.array([-n[1], n[0]])
    vt = float(v @ t)
    if abs(vt) > contact.slip_velocity:
        ft = -contact.friction * fn * np.sign(vt)
    else:
        ft = -contact.friction * fn * vt / contact.slip_velocity
    on_robot = fn * n + ft * t
    wrench = np.zeros(6)
    wrench[:2] = -on_robot
    return ContactResult(wrench, fn, float(ft), depth, n)


def contact_wrench(contact, ee_pose, ee_velocity, obstacle=ObstacleState()):
    """Wrench the end-effector point applies to the obstacle (6-vector, N and N m).

    Zero without penetration. Otherwise the normal force is
    ``max(0, k_c * depth + b_c * depth_rate)`` and the tangential force is the
    Coulomb value ``mu_c * F_n`` opposing sliding, linearly regularized below
    ``slip_velocity``.
    """
    if contact is None:
        return np.zeros(6)
    return contact_forces(contact, ee_pose, ee_velocity, obstacle).wrench


def step_obstacle(contact, state, push_force, dt):
    """Advance a pushable box one step under the robot's push and ground friction.

    ``push_force`` is the component of ``f_e`` along the push axis [N]. Uses
    semi-implicit Euler with stick-slip: a resting box only moves once the push
    exceeds ``mu_g m g``, and a sliding box sticks when its velocity would
    change sign.
    """
    if contact is None or contact.kind != "box" or not contact.pushable:
        return state
    limit = contact.ground_friction * contact.mass * contact.gravity
    v = state.velocity
    if v == 0.0:
        if abs(push_force) <= limit:
            return state
        direction = np.sign(push_force)
    else:
        direction = np.sign(v)
    accel = (push_force - limit * direction) / contact.mass
    v_new = v + accel * dt
    if np.sign(v_new) != direction:
        v_new = 0.0
    return ObstacleState(offset=state.offset + v_new * dt, velocity=float(v_new))
