"""Exception hierarchy shared across the package."""


class RadviscError(Exception):
    """Base class for all package errors."""


class DomainError(RadviscError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class QuadratureError(RadviscError, ArithmeticError):
    """A quadrature failed its internal convergence check.

    The estimated error is attached as ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ScheduleError(RadviscError):
    """A viscosity schedule is invalid or violates its constraint budget."""

    def __init__(self, message, addend=None, value=None):
        super().__init__(message)
        self.addend = addend
        self.value = value


class ConfigError(RadviscError, ValueError):
    """Malformed or inconsistent configuration."""


class DataError(RadviscError, ValueError):
    """Initial data cannot be turned into admissible approximate data."""


class SolverError(RadviscError):
    """A time integration failed.

    ``t`` and ``location`` (radius) identify the failure; ``trajectory``
    holds the partial trajectory when raised from ``run``.
    """

    def __init__(self, message, t=None, location=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.location = location
        self.trajectory = trajectory


class AdmissibilityError(RadviscError, ValueError):
    """A test function violates the admissibility condition of its weak form."""
