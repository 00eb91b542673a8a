"""Robust adaptive backstepping impedance control for planar (mobile) manipulators.

The package couples an Euler-Lagrange plant model, a reference impedance
model, a Taylor-series uncertainty estimator and a backstepping torque law in
a fixed-step simulator, with a PD baseline for comparison.
"""

from .config import ScenarioConfig, load_config, parse_config, preset_names
from .contact import ContactModel, ObstacleState, contact_wrench
from .controller import (
    ErrorCoordinates,
    GainSet,
    PdGains,
    StabilityCertificate,
    error_coords,
    lyapunov_value,
    pd_torque,
    rabic_torque,
    stability_constants,
)
from .dynamics import RobotModel, compute_terms, end_effector_state, forward_dynamics
from .estimator import EstimatorConfig, EstimatorState, build_regressor, init_estimator, predict_uncertainty
from .exceptions import ConfigError, ContractError, DomainError, NumericError, RabicError, SimulationDiverged
from .reference import ImpedanceParams, ReferenceState, TrajectorySpec, desired_point, step_reference
from .simulation import Metrics, SimLog, compare_runs, compute_metrics, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContactModel",
    "ContractError",
    "DomainError",
    "ErrorCoordinates",
    "EstimatorConfig",
    "EstimatorState",
    "GainSet",
    "ImpedanceParams",
    "Metrics",
    "NumericError",
    "ObstacleState",
    "PdGains",
    "RabicError",
    "ReferenceState",
    "RobotModel",
    "ScenarioConfig",
    "SimLog",
    "SimulationDiverged",
    "StabilityCertificate",
    "TrajectorySpec",
    "build_regressor",
    "compare_runs",
    "compute_metrics",
    "compute_terms",
    "contact_wrench",
    "desired_point",
    "end_effector_state",
    "error_coords",
    "forward_dynamics",
    "init_estimator",
    "load_config",
    "lyapunov_value",
    "parse_config",
    "pd_torque",
    "predict_uncertainty",
    "preset_names",
    "rabic_torque",
    "run_scenario",
    "stability_constants",
    "step_reference",
]
