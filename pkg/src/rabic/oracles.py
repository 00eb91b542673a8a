"""Finite-difference Lagrangian oracle for the closed-form dynamics.

Everything here is computed from two scalar functions, the kinetic energy
(obtained by propagating body velocities link by link) and the potential
energy, so it shares no code path with the Jacobian-based closed form in
:mod:`rabic.dynamics`. All functions broadcast over leading batch axes.
"""

import numpy as np


def _cross_z(w, r):
    """``w * z_hat x r`` for planar vectors ``r`` of shape ``(..., 2)``."""
    return np.stack((-w * r[..., 1], w * r[..., 0]), axis=-1)


def _unit(angle):
    return np.stack((np.cos(angle), np.sin(angle)), axis=-1)


def _full_dim(model):
    return model.n_m + (3 if model.n_b else 0)


def full_coordinates(model, theta, base_xy=(0.0, 0.0)):
    """Map reduced coordinates ``theta`` (..., n) to full ones (..., n_f)."""
    theta = np.asarray(theta, dtype=float)
    if model.n_b == 0:
        return theta.copy()
    heading = model.wheel_radius * (theta[..., 0] - theta[..., 1]) / (2.0 * model.half_track)
    xy = np.broadcast_to(np.asarray(base_xy, dtype=float), theta.shape[:-1] + (2,))
    return np.concatenate((xy, heading[..., None], theta[..., 2:]), axis=-1)


def rolling_map(model, q):
    """``S(q)`` with ``qdot = S thetadot``, shape (..., n_f, n)."""
    q = np.asarray(q, dtype=float)
    n, n_f = model.n, _full_dim(model)
    S = np.zeros(q.shape[:-1] + (n_f, n))
    if model.n_b == 0:
        S[..., :, :] = np.eye(n)
        return S
    r, b = model.wheel_radius, model.half_track
    # forward speed v = r (wR + wL) / 2, yaw rate = r (wR - wL) / (2 b)
    for col, sgn in ((0, 1.0), (1, -1.0)):
        S[..., 0, col] = 0.5 * r * np.cos(q[..., 2])
        S[..., 1, col] = 0.5 * r * np.sin(q[..., 2])
        S[..., 2, col] = sgn * r / (2.0 * b)
    for i in range(model.n_m):
        S[..., 3 + i, 2 + i] = 1.0
    return S


def kinetic_energy(model, q, qdot):
    """Kinetic energy from link-by-link velocity propagation."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    shape = np.broadcast_shapes(q.shape, qdot.shape)[:-1]
    T = np.zeros(shape)
    if model.n_b:
        p = q[..., 0:2]
        v = qdot[..., 0:2]
        angle = q[..., 2]
        omega = qdot[..., 2]
        T = T + 0.5 * model.base_mass * np.sum(v * v, axis=-1) + 0.5 * model.base_inertia * omega**2
        arm = model.mount_offset * _unit(angle)
        v = v + _cross_z(omega, arm)
        first = 3
    else:
        v = np.zeros(shape + (2,))
        angle = np.zeros(shape)
        omega = np.zeros(shape)
        first = 0
    for i in range(model.n_m):
        angle = angle + q[..., first + i]
        omega = omega + qdot[..., first + i]
        u = _unit(angle)
        v_com = v + _cross_z(omega, model.link_com[i] * u)
        T = T + 0.5 * model.link_mass[i] * np.sum(v_com * v_com, axis=-1)
        T = T + 0.5 * model.link_inertia[i] * omega**2
        v = v + _cross_z(omega, model.link_length[i] * u)
    return T


def potential(model, q):
    """``-g * sum(m x_com)`` with gravity along +x; zero without in-plane gravity."""
    q = np.asarray(q, dtype=float)
    g = model.gravity if model.in_plane_gravity else 0.0
    V = np.zeros(q.shape[:-1])
    if g == 0.0:
        return V
    p = np.zeros(q.shape[:-1] + (2,))
    angle = np.zeros(q.shape[:-1])
    first = 0
    if model.n_b:
        p = q[..., 0:2] + model.mount_offset * _unit(q[..., 2])
        angle = q[..., 2]
        V = V - g * model.base_mass * q[..., 0]
        first = 3
    for i in range(model.n_m):
        angle = angle + q[..., first + i]
        u = _unit(angle)
        V = V - g * model.link_mass[i] * (p + model.link_com[i] * u)[..., 0]
        p = p + model.link_length[i] * u
    return V


def _polarize(energy, q, n):
    """Matrix of the quadratic form ``energy(q, v) = 0.5 v^T A v`` by exact polarization."""
    eye = np.eye(n)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    dirs = np.concatenate([eye] + ([np.array([eye[i] + eye[j] for i, j in pairs])] if pairs else []))
    vals = energy(q[..., None, :], dirs)
    A = np.zeros(q.shape[:-1] + (n, n))
    diag = vals[..., :n]
    for i in range(n):
        A[..., i, i] = 2.0 * diag[..., i]
    for k, (i, j) in enumerate(pairs):
        off = vals[..., n + k] - diag[..., i] - diag[..., j]
        A[..., i, j] = off
        A[..., j, i] = off
    return A


def full_mass_matrix(model, q):
    q = np.asarray(q, dtype=float)
    return _polarize(lambda qq, vv: kinetic_energy(model, qq, vv), q, q.shape[-1])


def _fd_along(fn, q, direction, h):
    return (fn(q + h * direction) - fn(q - h * direction)) / (2.0 * h)


def mass_matrix_gradient(model, q, h=1e-6):
    """``dM[..., i, j, k] = d M_ij / d q_k`` by central differences."""
    q = np.asarray(q, dtype=float)
    n_f = q.shape[-1]
    cols = [_fd_along(lambda x: full_mass_matrix(model, x), q, np.eye(n_f)[k], h) for k in range(n_f)]
    return np.stack(cols, axis=-1)


def lagrangian_terms(model, theta, theta_dot, h=1e-6):
    """Oracle ``D``, ``C``, ``G`` and the bias ``C thetadot`` at reduced states.

    ``C`` is the Christoffel matrix of the full inertia pushed through the
    rolling map; ``C_thd`` is assembled separately from the Euler-Lagrange
    residual ``S^T (Mdot qdot + M Sdot thd - dT/dq)`` so the two act as
    cross-checks of each other.
    """
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    n = model.n
    q = full_coordinates(model, theta)
    S = rolling_map(model, q)
    qdot = np.einsum("...ij,...j->...i", S, theta_dot)

    D = _polarize(lambda qq, vv: kinetic_energy(model, full_coordinates(model, qq), np.einsum(
        "...ij,...j->...i", rolling_map(model, full_coordinates(model, qq)), vv)), theta, n)

    M = full_mass_matrix(model, q)
    dM = mass_matrix_gradient(model, q, h)
    gamma = 0.5 * (dM + np.swapaxes(dM, -1, -2) - np.moveaxis(dM, -1, -3))
    C_q = np.einsum("...ijk,...k->...ij", gamma, qdot)
    S_dot = _fd_along(lambda x: rolling_map(model, x), q, qdot, h)
    St = np.swapaxes(S, -1, -2)
    C = St @ M @ S_dot + St @ C_q @ S

    M_dot_qdot = np.einsum("...ij,...j->...i", _fd_along(lambda x: full_mass_matrix(model, x), q, qdot, h), qdot)
    n_f = q.shape[-1]
    dT_dq = np.stack(
        [_fd_along(lambda x: kinetic_energy(model, x, qdot), q, np.eye(n_f)[k], h) for k in range(n_f)], axis=-1
    )
    bias = M_dot_qdot + np.einsum("...ij,...jk,...k->...i", M, S_dot, theta_dot) - dT_dq
    C_thd = np.einsum("...ji,...j->...i", S, bias)

    G = np.stack(
        [
            _fd_along(lambda x: potential(model, full_coordinates(model, x)), theta, np.eye(n)[k], 1e-5)
            for k in range(n)
        ],
        axis=-1,
    )
    return {"D": D, "C": C, "G": G, "C_thd": C_thd}


def ee_position(model, theta, base_xy=(0.0, 0.0)):
    """End-effector position by straightforward link summation."""
    q = full_coordinates(model, theta, base_xy)
    if model.n_b:
        p = q[..., 0:2] + model.mount_offset * _unit(q[..., 2])
        angle = q[..., 2]
        first = 3
    else:
        p = np.zeros(q.shape[:-1] + (2,))
        angle = np.zeros(q.shape[:-1])
        first = 0
    for i in range(model.n_m):
        angle = angle + q[..., first + i]
        p = p + model.link_length[i] * _unit(angle)
    return p
