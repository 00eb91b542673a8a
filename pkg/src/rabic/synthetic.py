"""Scalar closed loop with a known uncertainty, for checking the Lyapunov certificate.

The plant is written directly in error coordinates::

    xi1' = xi2,    xi2' = -tau / D_hat + gamma . phi

so the lumped uncertainty is exactly linear in the regressor with a known
coefficient vector ``phi`` and no residual. Controller, estimator and plant are
integrated together with RK4 as one continuous-time system, which keeps the
logged ``V`` free of sample-and-hold artifacts.
"""

from dataclasses import dataclass, replace

import numpy as np

from .controller import ErrorCoordinates, lyapunov_value, rabic_torque, stability_constants, surface
from .estimator import build_regressor, init_estimator
from .numerics import rk4_step


@dataclass
class SyntheticRun:
    """Sampled signals of one synthetic run (all 1-D except ``phi_hat``)."""

    t: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    acc: np.ndarray
    s: np.ndarray
    phi_hat: np.ndarray  # (N, L)
    psi_hat: np.ndarray
    V: np.ndarray
    phi_true: np.ndarray
    psi_true: float
    certificate: object

    def v_dot(self):
        """Central-difference ``dV/dt`` at interior samples."""
        dt = self.t[1] - self.t[0]
        return (self.V[2:] - self.V[:-2]) / (2.0 * dt)

    def certificate_margin(self):
        """``Vdot + rho V^l - c`` at interior samples (nonpositive when the bound holds)."""
        cert = self.certificate
        V = np.maximum(self.V[1:-1], 0.0)
        return self.v_dot() + cert.rho * V**cert.l - cert.c


def run_synthetic(gains, cfg, phi_true, xi1_0=0.0, xi2_0=0.5, duration=20.0, dt=1e-3):
    """Simulate the scalar closed loop and log ``V`` along the way.

    Parameters
    ----------
    gains : GainSet
        One-joint gains.
    cfg : EstimatorConfig
        One-joint estimator settings; ``phi_true`` must have ``cfg.size`` entries.
    phi_true : array_like
        Coefficients of the true uncertainty.
    """
    phi_true = np.asarray(phi_true, dtype=float)
    L = cfg.size
    if gains.n != 1 or cfg.n != 1 or phi_true.shape != (L,):
        raise ValueError("synthetic plant is scalar: one joint and len(phi_true) == l1 + l2 + 1")
    D_hat = float(gains.D_hat[0, 0])
    base = init_estimator(cfg, [xi2_0])

    def unpack(x):
        return x[0], x[1], x[2], x[3 : 3 + L], x[3 + L]

    def deriv(_, x):
        xi1, xi2, acc, phi_hat, psi_hat = unpack(x)
        st = replace(base, integral=np.array([acc]))
        gamma = build_regressor(st, [xi2])[0]
        s = surface(np.array([xi1]), np.array([xi2]), gains)
        coords = ErrorCoordinates(np.zeros(1), np.zeros(1), np.array([xi1]), np.array([xi2]), s)
        tau = rabic_torque(gains, coords, [gamma @ phi_hat], [psi_hat])[0]
        dphi = cfg.rho_phi[0] * s[0] * gamma - cfg.sigma_phi[0] * phi_hat
        dpsi = cfg.rho_psi[0] * abs(s[0]) - cfg.sigma_psi[0] * psi_hat
        out = np.empty_like(x)
        out[0] = xi2
        out[1] = -tau / D_hat + gamma @ phi_true
        out[2] = xi2 - xi2_0
        out[3 : 3 + L] = dphi
        out[3 + L] = dpsi
        return out

    steps = int(round(duration / dt))
    X = np.empty((steps + 1, 4 + L))
    X[0] = np.concatenate(([xi1_0, xi2_0, 0.0], np.zeros(L), [0.0]))
    for k in range(steps):
        X[k + 1] = rk4_step(deriv, X[k], k * dt, dt)
        X[k + 1, 3 + L] = max(X[k + 1, 3 + L], 0.0)

    xi1, xi2, acc = X[:, 0], X[:, 1], X[:, 2]
    phi_hat, psi_hat = X[:, 3 : 3 + L], X[:, 3 + L]
    s = surface(xi1, xi2, gains)
    coords = ErrorCoordinates(np.zeros_like(xi1), np.zeros_like(xi1), xi1, xi2, s)
    V = lyapunov_value(coords, phi_true - phi_hat, -psi_hat, cfg)
    cert = stability_constants(gains, cfg, phi_true, 0.0, 0)
    return SyntheticRun(
        t=np.arange(steps + 1) * dt,
        xi1=xi1,
        xi2=xi2,
        acc=acc,
        s=s,
        phi_hat=phi_hat,
        psi_hat=psi_hat,
        V=V,
        phi_true=phi_true,
        psi_true=0.0,
        certificate=cert,
    )

