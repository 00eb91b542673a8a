import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabic.exceptions import DomainError, NumericError
from rabic.numerics import (
    check_power_subadditivity,
    check_young_inequality,
    finite_difference_gradient,
    guarded_power_deriv,
    rk4_step,
    signed_pow,
)

mpmath.mp.dps = 40
finite = st.floats(-1e6, 1e6, allow_nan=False)
exponent = st.floats(0.01, 2.0)


def test_signed_pow_examples():
    assert signed_pow(-8.0, 1 / 3) == pytest.approx(-2.0, rel=1e-15)
    assert signed_pow(0.0, 0.5) == 0.0
    expect = float(mpmath.exp(mpmath.mpf("0.999") * mpmath.log(2)))
    assert signed_pow(2.0, 0.999) == pytest.approx(expect, rel=1e-14)
    assert expect == pytest.approx(1.998614, abs=1e-6)


def test_signed_pow_rejects_bad_input():
    with pytest.raises(DomainError):
        signed_pow(np.nan, 0.5)
    with pytest.raises(DomainError):
        signed_pow(1.0, 0.0)
    with pytest.raises(DomainError):
        signed_pow(1.0, np.inf)


@given(finite, exponent)
def test_signed_pow_is_odd(x, q):
    assert signed_pow(-x, q) == -signed_pow(x, q)


@given(finite)
def test_signed_pow_identity_exponent(x):
    assert signed_pow(x, 1.0) == x


@given(finite, finite, exponent)
def test_signed_pow_monotone(a, b, q):
    lo, hi = min(a, b), max(a, b)
    assert signed_pow(lo, q) <= signed_pow(hi, q)


def test_signed_pow_array():
    out = signed_pow(np.array([-4.0, 0.0, 9.0]), 0.5)
    np.testing.assert_allclose(out, [-2.0, 0.0, 3.0])


def test_guarded_power_deriv_examples():
    assert guarded_power_deriv(1.0, 0.999, 1e-3) == 1.0
    at_zero = float(mpmath.exp(-mpmath.mpf("0.002") * mpmath.log(mpmath.mpf("1e-3"))))
    assert guarded_power_deriv(0.0, 0.999, 1e-3) == pytest.approx(at_zero, rel=1e-13)
    assert at_zero == pytest.approx(1.013911, abs=1e-6)
    half = float(mpmath.exp(-mpmath.mpf("0.002") * mpmath.log(mpmath.mpf("0.5"))))
    assert guarded_power_deriv(0.5, 0.999, 1e-3) == pytest.approx(half, rel=1e-13)
    assert half == pytest.approx(1.001387, abs=1e-6)


def test_guarded_power_deriv_continuous_at_guard():
    eps = 1e-3
    for l in (0.9, 0.95, 0.999):
        below = guarded_power_deriv(eps * (1 - 1e-12), l, eps)
        above = guarded_power_deriv(eps * (1 + 1e-12), l, eps)
        assert abs(above - below) / below <= 1e-9


@given(st.floats(-10, 10), st.floats(0.51, 0.999))
def test_guarded_power_deriv_finite_positive(x, l):
    v = guarded_power_deriv(x, l)
    assert np.isfinite(v) and v > 0


def test_guarded_power_deriv_domain():
    with pytest.raises(DomainError):
        guarded_power_deriv(0.1, 1.0)
    with pytest.raises(DomainError):
        guarded_power_deriv(0.1, 0.9, eps=0.0)


def test_rk4_examples():
    x0 = np.array([1.0, -2.0])
    np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros(2), x0, 3.0, 0.01), x0)
    assert rk4_step(lambda t, x: np.ones(1), np.zeros(1), 0.0, 0.001)[0] == pytest.approx(0.001, abs=1e-18)
    assert rk4_step(lambda t, x: x, np.ones(1), 0.0, 0.1)[0] == pytest.approx(np.exp(0.1), abs=1e-7)


def test_rk4_fourth_order():
    # global error on x' = -x over 1 s scales as dt^4
    def solve(dt):
        x = np.ones(1)
        for k in range(int(round(1 / dt))):
            x = rk4_step(lambda t, y: -y, x, k * dt, dt)
        return abs(x[0] - np.exp(-1.0))

    ratio = solve(0.1) / solve(0.05)
    assert 14 < ratio < 18


def test_rk4_non_finite_reports_time():
    with pytest.raises(NumericError) as exc:
        rk4_step(lambda t, x: np.full(1, np.inf), np.ones(1), 2.5, 0.1)
    assert exc.value.t == 2.5
    with pytest.raises(DomainError):
        rk4_step(lambda t, x: x, np.ones(1), 0.0, 0.0)


def test_young_examples():
    assert check_young_inequality(0, 5, 1, 1, 1)
    assert check_young_inequality(1, 1, 1, 1, 1)
    with pytest.raises(DomainError):
        check_young_inequality(1, 1, 0, 1, 1)
    with pytest.raises(DomainError):
        check_young_inequality(1, 1, 1, 1, -1)


def test_young_random_sweep(rng):
    for _ in range(10_000):
        q1, q2 = rng.uniform(-10, 10, 2)
        a, b, p = rng.uniform(1e-3, 3.0, 3)
        assert check_young_inequality(q1, q2, a, b, p)


def test_young_tight_at_equality():
    # equality holds at |q1| = |q2| = p = 1; a perturbed right side must then fail
    assert check_young_inequality(1.0, 1.0, 1.0, 1.0, 1.0)
    assert check_young_inequality(-3.0, 3.0, 0.7, 1.3, 2.0)
    u = v = 1.0
    a = b = 1.0
    assert u**a * v**b > 0.99 * ((a / 2) * u**2 + (b / 2) * v**2)


def test_subadditivity_examples():
    assert check_power_subadditivity([3.7], 0.6)
    assert check_power_subadditivity([1, 1], 0.5)
    with pytest.raises(DomainError):
        check_power_subadditivity([-1, 1], 0.5)
    with pytest.raises(DomainError):
        check_power_subadditivity([1, 1], 1.0)


def test_subadditivity_random_sweep(rng):
    for _ in range(10_000):
        vals = rng.exponential(2.0, rng.integers(1, 9))
        assert check_power_subadditivity(vals, rng.uniform(1e-3, 1 - 1e-3))


def test_finite_difference_gradient():
    x = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(finite_difference_gradient(lambda v: 4.2, x), np.zeros(3))
    np.testing.assert_allclose(finite_difference_gradient(lambda v: 0.5 * v @ v, x, 1e-5), x, atol=1e-8)
    with pytest.raises(DomainError):
        finite_difference_gradient(lambda v: 0.0, x, 0.0)


def test_finite_difference_gradient_kinetic_energy(models, rng):
    from rabic.dynamics import compute_terms

    model = models["2-link"]
    th = rng.uniform(-1, 1, 2)
    thd = rng.uniform(-1, 1, 2)
    T = lambda q: 0.5 * thd @ compute_terms(model, q, thd).D @ thd  # noqa: E731
    # closed form for two links: dT/dth2 = -m2 l1 lc2 sin(th2) thd1 (thd1 + thd2)
    m2, l1, lc2 = model.link_mass[1], model.link_length[0], model.link_com[1]
    expect = np.array([0.0, -m2 * l1 * lc2 * np.sin(th[1]) * thd[0] * (thd[0] + thd[1])])
    np.testing.assert_allclose(finite_difference_gradient(T, th), expect, atol=1e-6)


def test_finite_difference_gradient_non_finite():
    with pytest.raises(NumericError):
        finite_difference_gradient(lambda v: np.inf, np.zeros(2))


@settings(max_examples=200)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=8), st.floats(0.01, 0.99))
def test_subadditivity_property(vals, l):
    assert check_power_subadditivity(vals, l)
