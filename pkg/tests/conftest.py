import numpy as np
import pytest

from rabic.checks import sample_models
from rabic.dynamics import RobotModel


@pytest.fixture(scope="session")
def models():
    return sample_models()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pendulum(m=1.5, lc=0.3, inertia=0.02, length=0.6, gravity=9.81):
    return RobotModel(link_mass=[m], link_length=[length], link_com=[lc], link_inertia=[inertia], gravity=gravity)


def small_raw(controller="pd", duration=0.2, contact=None):
    """Minimal fixed-base 2-link scenario in the horizontal plane."""
    raw = {
        "name": "small",
        "robot": {
            "links": {"mass": [1.2, 0.8], "length": [0.5, 0.4], "com": [0.25, 0.2], "inertia": [0.05, 0.03]},
            "gravity": 9.81,
            "in_plane_gravity": False,
        },
        "trajectory": {
            "t_f": 1.0,
            "joints": [{"kind": "sinusoid", "amplitude": 0.3, "omega": "pi"}, {"kind": "constant", "value": 0.5}],
        },
        "controller": {
            "kind": controller,
            "pd": {"kp": [40.0, 30.0], "kd": [8.0, 6.0]},
            "rabic": {
                "gains": {"k1": [20.0, 20.0], "k2": [30.0, 30.0], "l": 0.95, "D_hat": [0.3, 0.1]},
                "impedance": {"B_r": 20, "K_r": 10},
                "estimator": {"rho_phi": 5.0, "sigma_phi": 0.05, "rho_psi": 0.1, "sigma_psi": 0.05},
            },
        },
        "sim": {"duration": duration, "dt": 0.001, "seed": 3},
    }
    if contact is not None:
        raw["contact"] = contact
    return raw
