"""Artificial-viscosity approximation of radially symmetric isentropic gas flow, with estimate checks."""

from .config import RunConfig, load, loads
from .errors import (
    AdmissibilityError,
    ConfigError,
    DataError,
    DomainError,
    QuadratureError,
    RadviscError,
    ScheduleError,
    SolverError,
)
from .model import GasLaw, RadialField, RadialGrid
from .pipeline import evaluate_level, sweep_report
from .scheduler import ViscousParams, schedule, verify_constraints
from .solver import SolverConfig, Trajectory, prepare_initial_data, run

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConfigError",
    "DataError",
    "DomainError",
    "GasLaw",
    "QuadratureError",
    "RadialField",
    "RadialGrid",
    "RadviscError",
    "RunConfig",
    "ScheduleError",
    "SolverConfig",
    "SolverError",
    "Trajectory",
    "ViscousParams",
    "evaluate_level",
    "load",
    "loads",
    "prepare_initial_data",
    "run",
    "schedule",
    "sweep_report",
    "verify_constraints",
]
