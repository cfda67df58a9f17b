"""
Custom exceptions for array design operations.

This module defines a hierarchy of exceptions for handling
configuration, scenario and solver failures consistently across
the library and the CLI.
"""
from typing import Optional


class DesignError(Exception):
    """Base exception for array design operations."""
    pass


class InvalidConfigError(DesignError):
    """Raised when a run configuration cannot be parsed or validated."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class InvalidScenarioError(DesignError, ValueError):
    """Raised when scenario geometry or sampling parameters are invalid."""
    pass


class SolverError(DesignError):
    """Raised when a numerical solver fails to return a usable point."""

    def __init__(self, message: str, status: Optional[str] = None):
        self.status = status
        super().__init__(message)


class BayesianEngineError(SolverError):
    """Raised when a BCS posterior system is singular."""

    def __init__(self, message: str, condition: Optional[float] = None):
        self.condition = condition
        super().__init__(message, status="singular")


class RankDeficientError(DesignError):
    """Raised when the mainlobe constraint of a redesign cannot be met."""

    def __init__(self, rank: int, required: int = 2):
        self.rank = rank
        self.required = required
        super().__init__(
            f"Mainlobe constraint block has rank {rank}, {required} required; "
            "mainlobe is unreachable with the given placements"
        )


class ZeroMainlobeError(DesignError):
    """Raised when a pattern cannot be normalized to a zero mainlobe."""
    pass


class FeasibilityError(DesignError):
    """Raised when a report breaks the separation or one-dipole-per-location rules."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID_CONFIG = 2
EXIT_NO_SOLUTION = 3
EXIT_SOLVER_FAILURE = 4


def exit_code_for(error: Exception) -> int:
    """
    Convert an exception into a CLI exit code.

    Args:
        error: Exception raised while running a design

    Returns:
        Process exit code
    """
    if isinstance(error, (InvalidConfigError, InvalidScenarioError)):
        return EXIT_INVALID_CONFIG

    if isinstance(error, (SolverError, RankDeficientError, ZeroMainlobeError, FeasibilityError)):
        return EXIT_SOLVER_FAILURE

    return EXIT_UNEXPECTED
