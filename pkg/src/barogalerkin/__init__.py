"""Spectral Galerkin simulation of a viscous barotropic gas with a free boundary."""

from .errors import (
    BarogalerkinError,
    ConfigError,
    InsufficientResolution,
    InvalidInitialData,
    MonitorViolation,
    NonMonotoneMap,
    SolverError,
    StepSizeUnderflow,
    StiffnessFailure,
    VacuumApproach,
)
from .model import InitialData, ModelParams, pressure, stationary_xi, validate_initial_data
from .galerkin import GalerkinState, Trajectory, assemble_rhs, initial_state, run, step

__version__ = "0.1.0"

__all__ = [
    "BarogalerkinError",
    "ConfigError",
    "InsufficientResolution",
    "InvalidInitialData",
    "MonitorViolation",
    "NonMonotoneMap",
    "SolverError",
    "StepSizeUnderflow",
    "StiffnessFailure",
    "VacuumApproach",
    "InitialData",
    "ModelParams",
    "pressure",
    "stationary_xi",
    "validate_initial_data",
    "GalerkinState",
    "Trajectory",
    "assemble_rhs",
    "initial_state",
    "run",
    "step",
]
