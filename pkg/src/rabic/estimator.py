"""Taylor-series uncertainty estimator and the leaky adaptation laws.

Each joint ``i`` approximates its lumped uncertainty by ``gamma_i . phi_hat_i``
with the regressor::

    gamma_i = [1, a, a^2, ..., a^l1, d, d^2, ..., d^l2]
    a = integral_0^t (xi2_i - xi2_i0) dt,    d = xi2_i - xi2_i0

and tracks a bound ``psi_hat_i`` on the residual. Both are adapted with
sigma-modification (leakage). All arrays are indexed by joint along axis 0,
so one state object serves every joint at once.
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, ContractError, DomainError, NumericError


def _per_joint(name, value, n):
    a = np.atleast_1d(np.asarray(value, dtype=float))
    if a.size == 1:
        a = np.full(n, float(a[0]))
    if a.shape != (n,):
        raise ConfigError(name, f"expected {n} entries, got {a.size}")
    return a


@dataclass(frozen=True)
class EstimatorConfig:
    """Taylor orders and per-joint adaptation rates / leaks (all strictly positive)."""

    n: int
    l1: int = 1
    l2: int = 1
    rho_phi: np.ndarray = 50.0
    sigma_phi: np.ndarray = 0.005
    rho_psi: np.ndarray = 0.1
    sigma_psi: np.ndarray = 0.005

    def __post_init__(self):
        if self.l1 < 0 or self.l2 < 0 or self.l1 + self.l2 < 1:
            raise ConfigError("estimator", f"need l1, l2 >= 0 and l1 + l2 >= 1, got {self.l1}, {self.l2}")
        for name in ("rho_phi", "sigma_phi", "rho_psi", "sigma_psi"):
            v = _per_joint(f"estimator.{name}", getattr(self, name), self.n)
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ConfigError(f"estimator.{name}", "must be finite and > 0")
            object.__setattr__(self, name, v)

    @property
    def size(self):
        """Regressor length ``l1 + l2 + 1``."""
        return self.l1 + self.l2 + 1


@dataclass(frozen=True)
class EstimatorState:
    phi_hat: np.ndarray  # (n, l1 + l2 + 1)
    psi_hat: np.ndarray  # (n,)
    xi2_0: np.ndarray  # expansion point
    integral: np.ndarray  # running integral of (xi2 - xi2_0)
    xi2_last: np.ndarray  # last sample fed to advance_integral
    l1: int = 1
    l2: int = 1


def init_estimator(cfg, xi2_initial):
    """Zero estimates, expansion point at the initial ``xi2``."""
    xi2 = np.asarray(xi2_initial, dtype=float).copy()
    if xi2.shape != (cfg.n,):
        raise ContractError(f"xi2 must have shape ({cfg.n},), got {xi2.shape}")
    return EstimatorState(
        phi_hat=np.zeros((cfg.n, cfg.size)),
        psi_hat=np.zeros(cfg.n),
        xi2_0=xi2,
        integral=np.zeros(cfg.n),
        xi2_last=xi2.copy(),
        l1=cfg.l1,
        l2=cfg.l2,
    )


def build_regressor(state, xi2):
    """Regressor ``gamma`` for each joint, shape ``(n, l1 + l2 + 1)``."""
    acc = np.asarray(state.integral, dtype=float)
    dev = np.asarray(xi2, dtype=float) - state.xi2_0
    cols = [np.ones_like(acc)]
    cols += [acc**k for k in range(1, state.l1 + 1)]
    cols += [dev**m for m in range(1, state.l2 + 1)]
    return np.stack(cols, axis=-1)


def predict_uncertainty(gamma, phi_hat):
    """Estimator output ``tau_hat_i = gamma_i . phi_hat_i``."""
    gamma = np.asarray(gamma, dtype=float)
    phi_hat = np.asarray(phi_hat, dtype=float)
    if gamma.shape != phi_hat.shape:
        raise ContractError(f"regressor shape {gamma.shape} does not match coefficients {phi_hat.shape}")
    return np.sum(gamma * phi_hat, axis=-1)


def _check_dt(dt):
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")


def update_phi(state, gamma, s, cfg, dt):
    """Forward-Euler step of ``phi_hat' = rho_phi s gamma - sigma_phi phi_hat``."""
    _check_dt(dt)
    s = np.asarray(s, dtype=float)
    rho = cfg.rho_phi[:, None]
    sigma = cfg.sigma_phi[:, None]
    phi = state.phi_hat + dt * (rho * s[..., None] * gamma - sigma * state.phi_hat)
    if not np.all(np.isfinite(phi)):
        raise NumericError("Taylor coefficient update became non-finite")
    return replace(state, phi_hat=phi)


def update_psi(state, s, cfg, dt):
    """Forward-Euler step of ``psi_hat' = rho_psi |s| - sigma_psi psi_hat``, clamped at 0."""
    _check_dt(dt)
    psi = state.psi_hat + dt * (cfg.rho_psi * np.abs(s) - cfg.sigma_psi * state.psi_hat)
    return replace(state, psi_hat=np.maximum(psi, 0.0))


def advance_integral(state, xi2, dt):
    """Trapezoidal accumulation of ``xi2 - xi2_0`` from the last sample to ``xi2``."""
    _check_dt(dt)
    xi2 = np.asarray(xi2, dtype=float)
    inc = 0.5 * dt * ((state.xi2_last - state.xi2_0) + (xi2 - state.xi2_0))
    return replace(state, integral=state.integral + inc, xi2_last=xi2.copy())
