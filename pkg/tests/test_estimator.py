from dataclasses import replace

import numpy as np
import pytest

from rabic.controller import GainSet
from rabic.estimator import (
    EstimatorConfig,
    advance_integral,
    build_regressor,
    init_estimator,
    predict_uncertainty,
    update_phi,
    update_psi,
)
from rabic.exceptions import ConfigError, ContractError, DomainError, NumericError
from rabic.synthetic import run_synthetic


def cfg1(**kw):
    return EstimatorConfig(n=1, **kw)


def test_regressor_at_expansion_point():
    cfg = EstimatorConfig(n=2, l1=2, l2=3)
    st = init_estimator(cfg, [0.4, -0.2])
    gamma = build_regressor(st, [0.4, -0.2])
    assert gamma.shape == (2, cfg.size) == (2, 6)
    np.testing.assert_array_equal(gamma, [[1, 0, 0, 0, 0, 0]] * 2)


def test_regressor_examples():
    st = replace(init_estimator(cfg1(), [0.3]), integral=np.array([0.2]))
    np.testing.assert_allclose(build_regressor(st, [0.2])[0], [1.0, 0.2, -0.1])
    st = replace(init_estimator(cfg1(l1=2, l2=1), [0.0]), integral=np.array([0.5]))
    gamma = build_regressor(st, [0.0])[0]
    assert gamma[1] == 0.5 and gamma[2] == 0.25


@pytest.mark.parametrize("l1,l2", [(1, 0), (0, 1), (1, 1), (3, 2)])
def test_regressor_length(l1, l2):
    cfg = EstimatorConfig(n=3, l1=l1, l2=l2)
    assert build_regressor(init_estimator(cfg, np.zeros(3)), np.ones(3)).shape == (3, l1 + l2 + 1)


def test_predict_examples():
    gamma = np.array([[1.0, 0.4, -0.3]])
    assert predict_uncertainty(gamma, np.zeros((1, 3)))[0] == 0.0
    assert predict_uncertainty([[1.0, 0.0, 0.0]], [[2.5, 7.0, -3.0]])[0] == 2.5
    with pytest.raises(ContractError):
        predict_uncertainty(gamma, np.zeros((1, 2)))


def test_update_phi_examples():
    cfg = cfg1(rho_phi=50.0, sigma_phi=0.005)
    st = init_estimator(cfg, [0.0])
    same = update_phi(st, np.array([[1.0, 0.3, 0.2]]), np.zeros(1), cfg, 1e-3)
    np.testing.assert_array_equal(same.phi_hat, st.phi_hat)
    out = update_phi(st, np.array([[1.0, 0.0, 0.0]]), np.array([0.1]), cfg, 1e-3)
    np.testing.assert_allclose(out.phi_hat, [[0.005, 0.0, 0.0]], rtol=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_update_phi_errors():
    cfg = cfg1()
    st = init_estimator(cfg, [0.0])
    with pytest.raises(NumericError):
        update_phi(st, np.array([[1.0, 0, 0]]), np.array([np.inf]), cfg, 1e-3)
    with pytest.raises(DomainError):
        update_phi(st, np.array([[1.0, 0, 0]]), np.array([0.1]), cfg, 0.0)


def test_update_psi_examples():
    cfg = cfg1(rho_psi=0.1, sigma_psi=0.005)
    st = init_estimator(cfg, [0.0])
    assert update_psi(st, [0.0], cfg, 1e-3).psi_hat[0] == 0.0
    st = replace(st, psi_hat=np.array([1.0]))
    assert update_psi(st, [2.0], cfg, 1e-3).psi_hat[0] == pytest.approx(1.000195, abs=1e-12)


def test_update_psi_asymptote():
    cfg = cfg1(rho_psi=0.1, sigma_psi=0.5)
    st = init_estimator(cfg, [0.0])
    s, dt = 0.8, 1e-3
    steps = int(round(10 / 0.5 / dt))  # ten leak time constants
    for _ in range(steps):
        st = update_psi(st, [s], cfg, dt)
    target = 0.1 * s / 0.5
    assert st.psi_hat[0] == pytest.approx(target, rel=1e-2)
    # the discrete recursion's own closed form
    assert st.psi_hat[0] == pytest.approx(target * (1 - (1 - 0.5 * dt) ** steps), rel=1e-9)


def test_leak_decay_geometric():
    cfg = EstimatorConfig(n=2, sigma_phi=[0.005, 0.3], sigma_psi=[0.02, 0.7])
    st = replace(init_estimator(cfg, [0.0, 0.0]), phi_hat=np.full((2, 3), 1.5), psi_hat=np.array([2.0, 4.0]))
    dt = 1e-3
    for _ in range(1000):
        st = update_phi(st, np.zeros((2, 3)), np.zeros(2), cfg, dt)
        st = update_psi(st, np.zeros(2), cfg, dt)
    np.testing.assert_allclose(st.phi_hat, 1.5 * ((1 - cfg.sigma_phi * dt) ** 1000)[:, None] * np.ones((2, 3)), atol=1e-9)
    np.testing.assert_allclose(st.psi_hat, [2.0, 4.0] * (1 - cfg.sigma_psi * dt) ** 1000, atol=1e-9)


def test_psi_nonnegative_under_random_drive(rng):
    cfg = EstimatorConfig(n=3, rho_psi=[0.1, 1.0, 5.0], sigma_psi=[0.005, 50.0, 900.0])
    st = init_estimator(cfg, np.zeros(3))
    for _ in range(2000):
        st = update_psi(st, rng.standard_normal(3) * rng.exponential(3.0), cfg, 1e-3)
        assert np.all(st.psi_hat >= 0)


def test_estimates_bounded_under_bounded_drive(rng):
    cfg = cfg1(rho_phi=2.0, sigma_phi=0.5, rho_psi=1.0, sigma_psi=0.5)
    st = init_estimator(cfg, [0.0])
    bound_phi = 2.0 * 1.0 * 1.0 / 0.5
    bound_psi = 1.0 * 1.0 / 0.5
    for _ in range(20000):
        s = rng.uniform(-1, 1, 1)
        gamma = rng.uniform(-1, 1, (1, 3))
        st = update_phi(st, gamma, s, cfg, 1e-3)
        st = update_psi(st, s, cfg, 1e-3)
        assert np.all(np.abs(st.phi_hat) <= bound_phi) and st.psi_hat[0] <= bound_psi


def test_integral_constant_offset():
    st = init_estimator(cfg1(), [0.0])
    for _ in range(1000):
        st = advance_integral(st, [1.0], 1e-3)
    # the first trapezoid straddles the step from 0 to 1
    assert st.integral[0] == pytest.approx(1.0 - 0.5e-3, abs=1e-9)
    st = replace(init_estimator(cfg1(), [0.0]), xi2_last=np.array([1.0]))
    for _ in range(1000):
        st = advance_integral(st, [1.0], 1e-3)
    assert st.integral[0] == pytest.approx(1.0, abs=1e-9)


def test_integral_zero_offset():
    st = init_estimator(cfg1(), [0.7])
    for _ in range(100):
        st = advance_integral(st, [0.7], 1e-3)
    assert st.integral[0] == 0.0


def test_integral_full_period_sinusoid():
    st = init_estimator(cfg1(), [0.0])
    dt, period = 1e-3, 2.0
    for k in range(1, int(period / dt) + 1):
        st = advance_integral(st, [np.sin(2 * np.pi * k * dt / period)], dt)
    assert abs(st.integral[0]) < 1e-6


def test_config_validation():
    with pytest.raises(ConfigError):
        EstimatorConfig(n=1, l1=0, l2=0)
    with pytest.raises(ConfigError) as exc:
        EstimatorConfig(n=2, sigma_psi=[0.1, 0.0])
    assert exc.value.field == "estimator.sigma_psi"
    with pytest.raises(ContractError):
        init_estimator(cfg1(), [0.0, 1.0])


def test_synthetic_prediction_converges():
    # true uncertainty H = 2 + 3 (xi2 - xi2_0) with the loop starting at rest
    run = run_synthetic(GainSet(k1=[1.0], k2=[1.0], l=0.999), cfg1(), [2.0, 0.0, 3.0], xi2_0=0.0, duration=10.0)
    k = np.searchsorted(run.t, 5.0)
    gamma = np.stack((np.ones_like(run.acc), run.acc, run.xi2), axis=1)[k:]
    H = gamma @ run.phi_true
    pred = np.sum(gamma * run.phi_hat[k:], axis=1)
    assert np.max(np.abs(pred - H) / np.abs(H)) < 0.05
