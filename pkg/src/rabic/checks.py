"""Fast built-in invariant suite behind ``rabic check``.

Each check returns a :class:`CheckResult`; failures carry a counterexample.
``fault`` injects a known defect into one checker so the suite can be shown
to catch it (``"young-sign-flip"`` negates the Young-inequality verdict).
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from .controller import ErrorCoordinates, GainSet, rabic_torque
from .dynamics import RobotModel, compute_terms
from .estimator import EstimatorConfig, init_estimator, update_phi, update_psi
from .numerics import check_power_subadditivity, check_young_inequality
from .oracles import lagrangian_terms
from .reference import ImpedanceParams, ReferenceState, step_reference, steady_state_offset

FAULTS = ("young-sign-flip",)


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""
    seconds: float = 0.0


def sample_models():
    """Fixed-base and mobile 2- and 3-link models used by the oracle checks."""
    two = dict(link_mass=[1.2, 0.8], link_length=[0.5, 0.4], link_com=[0.25, 0.2], link_inertia=[0.03, 0.02])
    three = dict(
        link_mass=[2.0, 1.5, 1.0],
        link_length=[0.4, 0.35, 0.25],
        link_com=[0.2, 0.15, 0.1],
        link_inertia=[0.05, 0.03, 0.01],
    )
    return {
        "2-link": RobotModel(**two),
        "3-link": RobotModel(**three),
        "2-link+base": RobotModel(**two, n_b=2, in_plane_gravity=False, mount_offset=0.1),
        "3-link+base": RobotModel(**three, n_b=2, in_plane_gravity=False, mount_offset=0.2),
    }


def _young(rng, samples, fault):
    for _ in range(samples):
        q1, q2 = rng.uniform(-10, 10, 2).tolist()
        a, b, p = rng.uniform(0.05, 5.0, 3).tolist()
        ok = check_young_inequality(q1, q2, a, b, p)
        if fault == "young-sign-flip":
            ok = not ok
        if not ok:
            return False, f"violated at q1={q1!r}, q2={q2!r}, a={a!r}, b={b!r}, p={p!r}"
    return True, f"{samples} samples"


def _subadditivity(rng, samples):
    for _ in range(samples):
        vals = rng.exponential(1.0, rng.integers(1, 6))
        l = float(rng.uniform(0.01, 0.99))
        if not check_power_subadditivity(vals, l):
            return False, f"violated at values={vals.tolist()}, l={l!r}"
    return True, f"{samples} samples"


def _oracle(rng, samples):
    worst = 0.0
    for name, model in sample_models().items():
        th = rng.uniform(-np.pi, np.pi, (samples, model.n))
        thd = rng.uniform(-2, 2, (samples, model.n))
        ref = lagrangian_terms(model, th, thd)
        for i in range(samples):
            terms = compute_terms(model, th[i], thd[i])
            for key in ("D", "C", "G"):
                scale = max(1.0, np.abs(ref[key][i]).max())
                err = np.abs(getattr(terms, key) - ref[key][i]).max() / scale
                worst = max(worst, err)
                if err > 1e-6:
                    return False, f"{name} {key} rel err {err:.3g} at theta={th[i].tolist()}, theta_dot={thd[i].tolist()}"
    return True, f"worst rel err {worst:.2g}"


def _skew(rng, samples, h=1e-6):
    for name, model in sample_models().items():
        for _ in range(samples):
            th = rng.uniform(-np.pi, np.pi, model.n)
            thd = rng.uniform(-2, 2, model.n)
            v = rng.standard_normal(model.n)
            D_dot = (compute_terms(model, th + h * thd, thd).D - compute_terms(model, th - h * thd, thd).D) / (2 * h)
            C = compute_terms(model, th, thd).C
            val = v @ (D_dot - 2 * C) @ v
            if abs(val) > 1e-4:
                return False, f"{name} v^T(Ddot-2C)v = {val:.3g} at theta={th.tolist()}"
    return True, f"{samples} samples per model"


def _adaptation(rng, steps):
    cfg = EstimatorConfig(n=2, rho_phi=[50, 4], sigma_phi=[0.005, 0.01], rho_psi=[0.1, 0.05], sigma_psi=[0.005, 0.02])
    st = init_estimator(cfg, [0.0, 0.0])
    st = replace(st, phi_hat=np.ones((2, 3)), psi_hat=np.array([2.0, 3.0]))
    dt = 1e-3
    for _ in range(steps):
        st = update_phi(st, np.zeros((2, 3)), np.zeros(2), cfg, dt)
        st = update_psi(st, np.zeros(2), cfg, dt)
    expect_phi = (1 - cfg.sigma_phi * dt) ** steps
    expect_psi = np.array([2.0, 3.0]) * (1 - cfg.sigma_psi * dt) ** steps
    if np.abs(st.phi_hat - expect_phi[:, None]).max() > 1e-9 or np.abs(st.psi_hat - expect_psi).max() > 1e-9:
        return False, f"leak decay mismatch: phi={st.phi_hat.tolist()}, psi={st.psi_hat.tolist()}"
    st = init_estimator(cfg, [0.0, 0.0])
    for _ in range(steps):
        s = rng.standard_normal(2) * 5
        st = update_psi(st, s, cfg, dt)
        if np.any(st.psi_hat < 0):
            return False, f"psi_hat negative after s={s.tolist()}"
    return True, f"{steps} steps"


def _statics(rng, trials):
    n = 3
    J = rng.standard_normal((6, n))
    for _ in range(trials):
        # B_r <= 10 K_r keeps the slow mode fast enough to settle in the window
        K = rng.uniform(1, 20, n)
        imp = ImpedanceParams(rng.uniform(0.5, 2, n), rng.uniform(2, 10, n), K, rng.uniform(-1, 1, n))
        f = rng.uniform(-5, 5, 6)
        ref = ReferenceState(np.zeros(n), np.zeros(n))
        des = (np.zeros(n), np.zeros(n), np.zeros(n))
        for _ in range(8000):
            ref = step_reference(imp, ref, des, f, J, 0.02)
        expect = steady_state_offset(imp, imp.tau_d, J.T @ f)
        if np.abs(ref.theta_r - expect).max() > 1e-6:
            return False, f"settled at {ref.theta_r.tolist()}, expected {expect.tolist()}"
    return True, f"{trials} wrench/torque pairs"


def _torque_example():
    gains = GainSet(k1=[1.0], k2=[1.0], l=0.999)
    xi1, xi2 = np.array([0.5]), np.array([0.2])
    s = xi2 + gains.k1 * np.sign(xi1) * np.abs(xi1) ** (2 * gains.l - 1)
    tau = rabic_torque(gains, ErrorCoordinates(np.zeros(1), np.zeros(1), xi1, xi2, s), [0.3], [0.1])[0]
    return abs(tau - 1.8011) < 5e-4, f"tau = {tau:.6f}"


def run_checks(fault=None, seed=0, quick=True):
    """Run the suite and return the list of results."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    rng = np.random.default_rng(seed)
    n = 2000 if quick else 10000
    plan = [
        ("young-inequality", lambda: _young(rng, n, fault)),
        ("power-subadditivity", lambda: _subadditivity(rng, n)),
        ("dynamics-oracle", lambda: _oracle(rng, 25 if quick else 250)),
        ("skew-symmetry", lambda: _skew(rng, 25 if quick else 250)),
        ("adaptation-laws", lambda: _adaptation(rng, 1000)),
        ("reference-statics", lambda: _statics(rng, 2)),
        ("torque-law-example", _torque_example),
    ]
    results = []
    for name, fn in plan:
        t0 = time.perf_counter()
        ok, detail = fn()
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
