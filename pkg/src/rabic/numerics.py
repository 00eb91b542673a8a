"""Numerical primitives: signed powers, RK4, finite differences and inequality checkers.

All functions are pure and accept python floats or numpy arrays where it makes
sense; array inputs are processed elementwise.
"""

import numpy as np

from .exceptions import DomainError, NumericError

#: Absolute slack used by the inequality checkers to absorb roundoff.
INEQUALITY_SLACK = 1e-12


def _require_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{name} must be finite, got {value!r}")


def signed_pow(x, q):
    """Return ``sign(x) * |x|**q``.

    Odd in ``x`` and monotone nondecreasing for ``q > 0``. Works elementwise on
    arrays; a scalar input gives a python float.
    """
    _require_finite("x", x)
    _require_finite("q", q)
    if np.any(np.asarray(q) <= 0) or np.any(np.asarray(q) > 2):
        raise DomainError(f"exponent must lie in (0, 2], got {q!r}")
    out = np.sign(x) * np.abs(x) ** q
    return float(out) if np.ndim(out) == 0 else out


def guarded_power_deriv(xi1, l, eps=1e-3):
    """Return ``|xi1|**(2(l-1))`` with the base clamped below at ``eps``.

    The exponent is negative for ``l < 1`` so the raw factor is singular at
    ``xi1 = 0``; below ``eps`` the value is frozen at ``eps**(2(l-1))``.
    """
    _require_finite("xi1", xi1)
    _require_finite("l", l)
    if not 0.5 < l < 1.0:
        raise DomainError(f"l must lie in (0.5, 1), got {l!r}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    base = np.maximum(np.abs(xi1), eps)
    out = base ** (2.0 * (l - 1.0))
    return float(out) if np.ndim(out) == 0 else out


def rk4_step(deriv, state, t, dt):
    """Advance ``state`` by one classical Runge-Kutta step of size ``dt``.

    Parameters
    ----------
    deriv : callable
        ``deriv(t, state) -> dstate/dt``.
    state : array_like
        Current state vector.
    t : float
        Current time [s].
    dt : float
        Step size [s], must be positive.

    Raises
    ------
    NumericError
        If any stage evaluation is non-finite; carries ``t``.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    x = np.asarray(state, dtype=float)
    half = 0.5 * dt

    k1 = np.asarray(deriv(t, x), dtype=float)
    k2 = np.asarray(deriv(t + half, x + half * k1), dtype=float)
    k3 = np.asarray(deriv(t + half, x + half * k2), dtype=float)
    k4 = np.asarray(deriv(t + dt, x + dt * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NumericError("non-finite derivative in rk4_step", t=t)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def check_young_inequality(q1, q2, a, b, p):
    """Check ``|q1|^a |q2|^b <= a/(a+b) p |q1|^(a+b) + b/(a+b) p^(-a/b) |q2|^(a+b)``.

    Holds for any reals ``q1, q2`` and positive ``a, b, p``; returns the
    verdict within :data:`INEQUALITY_SLACK`.
    """
    for name, val in (("a", a), ("b", b), ("p", p)):
        if not np.isfinite(val) or val <= 0:
            raise DomainError(f"{name} must be positive and finite, got {val!r}")
    u, v = abs(q1), abs(q2)
    s = a + b
    with np.errstate(over="ignore"):
        lhs = u**a * v**b
        rhs = (a / s) * p * u**s + (b / s) * p ** (-a / b) * v**s
    return bool(lhs <= rhs + INEQUALITY_SLACK)


def check_power_subadditivity(values, l):
    """Check ``(sum p_i)^l <= sum p_i^l`` for nonnegative ``p_i`` and ``0 < l < 1``."""
    if not 0.0 < l < 1.0:
        raise DomainError(f"l must lie in (0, 1), got {l!r}")
    p = np.asarray(values, dtype=float)
    if p.size == 0:
        raise DomainError("values must be non-empty")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("values must be finite and nonnegative")
    lhs = float(np.sum(p)) ** l
    rhs = float(np.sum(p**l))
    return bool(lhs <= rhs + INEQUALITY_SLACK)


def finite_difference_gradient(f, x, h=1e-5):
    """Central-difference gradient of a scalar field ``f`` at ``x``."""
    if not h > 0:
        raise DomainError(f"h must be positive, got {h!r}")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = h
        hi = f(x + step)
        lo = f(x - step)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericError(f"non-finite function value near coordinate {i}")
        grad.flat[i] = (hi - lo) / (2.0 * h)
    return grad
