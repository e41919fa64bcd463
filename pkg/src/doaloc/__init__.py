"""Relative localisation of a GPS-denied agent from direction-of-arrival measurements."""

__version__ = "0.1.0"

from .diagnostics import Diagnostics, Flag, detect_unsuitable
from .errors import (
    AmbiguousSolutionWarning,
    DegenerateVectorError,
    DoalocError,
    EmptyInputError,
    GimbalLockWarning,
    InfeasibleError,
    SolverError,
)
from .geometry import DoaMeasurement, FrameId, Pose, doa_to_unit_vector, unit_vector_to_doa
from .linear_system import Measurements, MeasurementEpoch, assemble, solve_ls
from .metrics import error_report, rotation_error
from .mle import AttitudeLog, BodyObservations, MleOptions, NoiseModel, refine
from .montecarlo import CampaignConfig, monte_carlo
from .pipeline import SolveReport, localise, solve_scenario
from .procrustes import closest_rotation
from .scenario import Scenario, TrajectoryParams, DriftParams, generate_scenario
from .sdp import SolverOptions, Status
from .three_agent import TriMeasurements, solve_tri, solve_tri_scenario

__all__ = [
    "AmbiguousSolutionWarning",
    "AttitudeLog",
    "BodyObservations",
    "CampaignConfig",
    "DegenerateVectorError",
    "Diagnostics",
    "DoaMeasurement",
    "DoalocError",
    "DriftParams",
    "EmptyInputError",
    "Flag",
    "FrameId",
    "GimbalLockWarning",
    "InfeasibleError",
    "MeasurementEpoch",
    "Measurements",
    "MleOptions",
    "NoiseModel",
    "Pose",
    "Scenario",
    "SolveReport",
    "SolverError",
    "SolverOptions",
    "Status",
    "TrajectoryParams",
    "TriMeasurements",
    "assemble",
    "closest_rotation",
    "detect_unsuitable",
    "doa_to_unit_vector",
    "error_report",
    "generate_scenario",
    "localise",
    "monte_carlo",
    "refine",
    "rotation_error",
    "solve_ls",
    "solve_scenario",
    "solve_tri",
    "solve_tri_scenario",
    "unit_vector_to_doa",
]
