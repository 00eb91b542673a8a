"""Inner-loop controllers: backstepping impedance law, PD baseline, Lyapunov monitor.

Error coordinates per joint::

    e = theta_r - theta,  xi2 = e_dot + mu e,  xi1 = integral of xi2,
    s = xi2 + k1 * spow(xi1, 2l - 1)

where ``spow(x, q) = sign(x)|x|^q``. The torque law is::

    tau = D_hat [ xi1 + k1 (2l-1) xi2 |xi1|^(2(l-1))
                  + k2 spow(s, 2l-1) + tau_hat + sgn(s) psi_hat ]
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ContractError, NumericError
from .numerics import guarded_power_deriv, signed_pow


def _vec(name, value, n, positive=True):
    a = np.atleast_1d(np.asarray(value, dtype=float))
    if np.ndim(value) == 0 and n > 1:
        a = np.full(n, float(a[0]))
    if a.shape != (n,):
        raise ConfigError(name, f"expected {n} entries, got {a.size}")
    if not np.all(np.isfinite(a)) or (positive and np.any(a <= 0)):
        raise ConfigError(name, "entries must be finite and > 0")
    return a


@dataclass(frozen=True)
class GainSet:
    """Backstepping gains.

    ``D_hat`` may be given as a vector (diagonal) or a symmetric positive
    definite matrix; it is stored as a matrix.
    """

    k1: np.ndarray
    k2: np.ndarray
    l: float = 0.999
    mu: np.ndarray = 1.0
    D_hat: np.ndarray = 1.0
    sign_smoothing_eps: float = 0.0
    xi1_guard_eps: float = 1e-3

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.k1)).size
        object.__setattr__(self, "k1", _vec("gains.k1", self.k1, n))
        object.__setattr__(self, "k2", _vec("gains.k2", self.k2, n))
        object.__setattr__(self, "mu", _vec("gains.mu", self.mu, n))
        if not 0.5 < self.l < 1.0:
            raise ConfigError("gains.l", f"must lie in (0.5, 1), got {self.l}")
        D = np.asarray(self.D_hat, dtype=float)
        if D.ndim < 2:
            D = np.diag(_vec("gains.D_hat", D, n))
        if D.shape != (n, n) or not np.allclose(D, D.T):
            raise ConfigError("gains.D_hat", f"must be a symmetric {n}x{n} matrix")
        if np.linalg.eigvalsh(D)[0] <= 0:
            raise ConfigError("gains.D_hat", "must be positive definite")
        object.__setattr__(self, "D_hat", D)
        if self.sign_smoothing_eps < 0:
            raise ConfigError("gains.sign_smoothing_eps", "must be >= 0")
        if not self.xi1_guard_eps > 0:
            raise ConfigError("gains.xi1_guard_eps", "must be > 0")

    @property
    def n(self):
        return self.k1.size


@dataclass(frozen=True)
class PdGains:
    kp: np.ndarray
    kd: np.ndarray

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.kp)).size
        object.__setattr__(self, "kp", _vec("pd.kp", self.kp, n))
        object.__setattr__(self, "kd", _vec("pd.kd", self.kd, n))


@dataclass(frozen=True)
class ErrorCoordinates:
    e: np.ndarray
    e_dot: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    s: np.ndarray


def surface(xi1, xi2, gains):
    """``s = xi2 + k1 spow(xi1, 2l - 1)``."""
    return xi2 + gains.k1 * signed_pow(xi1, 2.0 * gains.l - 1.0)


def error_coords(theta_r, theta_r_dot, theta, theta_dot, gains, xi1_prev=None, dt=None, xi2_prev=None):
    """Error coordinates at the current sample.

    ``xi1`` is advanced from ``xi1_prev`` with the trapezoid rule over ``dt``
    using ``xi2_prev`` and the current ``xi2`` (right-endpoint rule when
    ``xi2_prev`` is omitted). Without ``xi1_prev`` the integral starts at 0.
    """
    e = np.asarray(theta_r, dtype=float) - np.asarray(theta, dtype=float)
    e_dot = np.asarray(theta_r_dot, dtype=float) - np.asarray(theta_dot, dtype=float)
    if e.shape != (gains.n,) or e_dot.shape != (gains.n,):
        raise ContractError(f"state vectors must have length {gains.n}")
    xi2 = e_dot + gains.mu * e
    if xi1_prev is None:
        xi1 = np.zeros_like(xi2)
    else:
        if dt is None or not dt > 0:
            raise ContractError("dt must be positive when integrating xi1")
        left = xi2 if xi2_prev is None else np.asarray(xi2_prev, dtype=float)
        xi1 = np.asarray(xi1_prev, dtype=float) + 0.5 * dt * (left + xi2)
    return ErrorCoordinates(e=e, e_dot=e_dot, xi1=xi1, xi2=xi2, s=surface(xi1, xi2, gains))


def smoothed_sign(s, eps):
    """``sign(s)`` (with ``sign(0) = 0``) or ``s / max(|s|, eps)`` when ``eps > 0``."""
    s = np.asarray(s, dtype=float)
    if eps == 0:
        return np.sign(s)
    return s / np.maximum(np.abs(s), eps)


def rabic_torque(gains, coords, tau_hat, psi_hat):
    """Backstepping impedance torque [N m] for every joint."""
    l = gains.l
    q = 2.0 * l - 1.0
    g = guarded_power_deriv(coords.xi1, l, gains.xi1_guard_eps)
    bracket = (
        coords.xi1
        + gains.k1 * q * coords.xi2 * g
        + gains.k2 * signed_pow(coords.s, q)
        + np.asarray(tau_hat, dtype=float)
        + smoothed_sign(coords.s, gains.sign_smoothing_eps) * np.asarray(psi_hat, dtype=float)
    )
    D = gains.D_hat
    if np.count_nonzero(D - np.diag(np.diag(D))) == 0:
        # keeps a bad joint from leaking nan into the others through 0 * inf
        tau = np.diag(D) * bracket
    else:
        tau = D @ bracket
    bad = ~np.isfinite(tau)
    if np.any(bad):
        raise NumericError(f"non-finite torque on joint(s) {np.flatnonzero(bad).tolist()}")
    return tau


def pd_torque(pd, theta_d, theta_d_dot, theta, theta_dot):
    """``kp (theta_d - theta) + kd (theta_d_dot - theta_dot)``."""
    return pd.kp * (np.asarray(theta_d) - np.asarray(theta)) + pd.kd * (
        np.asarray(theta_d_dot) - np.asarray(theta_dot)
    )


# ---------------------------------------------------------------------------
# Lyapunov monitor


def lyapunov_value(coords, phi_tilde, psi_tilde, cfg):
    """Per-joint ``V = xi1^2/2 + s^2/2 + (|phi~|^2 / rho_phi + psi~^2 / rho_psi) / 2``.

    ``phi_tilde`` has shape ``(n, l1 + l2 + 1)``; needs the true parameters, so
    this is only available in synthetic-truth runs.
    """
    phi_tilde = np.asarray(phi_tilde, dtype=float)
    psi_tilde = np.asarray(psi_tilde, dtype=float)
    return 0.5 * (
        np.asarray(coords.xi1) ** 2
        + np.asarray(coords.s) ** 2
        + np.sum(phi_tilde**2, axis=-1) / cfg.rho_phi
        + psi_tilde**2 / cfg.rho_psi
    )


@dataclass(frozen=True)
class StabilityCertificate:
    """Decay rate ``rho`` and residual constant ``c`` of ``Vdot + rho V^l <= c`` for one joint."""

    rho: float
    c: float
    l: float

    @property
    def residual_level(self):
        """Level ``(c / rho)^(1/l)`` of the residual set the bound drives ``V`` into."""
        return (self.c / self.rho) ** (1.0 / self.l)


def stability_constants(gains, cfg, phi_true, psi_true, joint):
    """``rho_i = min(2 k1, 2 k2, sigma_phi, sigma_psi)`` and the matching ``c_i``."""
    i = joint
    l = gains.l
    p = l ** (l / (1.0 - l))
    a_phi = cfg.sigma_phi[i] / (2.0 * cfg.rho_phi[i])
    a_psi = cfg.sigma_psi[i] / (2.0 * cfg.rho_psi[i])
    phi = np.asarray(phi_true, dtype=float)
    rho = min(2.0 * gains.k1[i], 2.0 * gains.k2[i], cfg.sigma_phi[i], cfg.sigma_psi[i])
    c = (a_phi + a_psi) * (1.0 - l) * p + a_phi * float(phi @ phi) + a_psi * float(psi_true) ** 2
    return StabilityCertificate(rho=float(rho), c=float(c), l=l)


def uncertainty_function(terms, gains, theta_r_ddot, e_dot, tau_r, tau_u, theta_dot, f_e):
    """Lumped uncertainty ``H`` such that ``xi2_dot = -D_hat^-1 tau_r + H``.

    Needs the true dynamics terms, so it serves test harnesses only.
    """
    D_inv = np.linalg.inv(terms.D)
    D_hat_inv = np.linalg.inv(gains.D_hat)
    inner = np.asarray(tau_u) - terms.C @ np.asarray(theta_dot) - terms.G - terms.J_mm.T @ np.asarray(f_e)
    return (
        np.asarray(theta_r_ddot)
        + gains.mu * np.asarray(e_dot)
        - (D_inv - D_hat_inv) @ np.asarray(tau_r)
        - D_inv @ inner
    )
