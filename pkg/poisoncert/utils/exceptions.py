"""
poisoncert/utils/exceptions.py
"""

from typing import Optional, Tuple


class PoisonCertError(Exception):
    """Base exception for poisoncert-specific errors."""
    pass


class ContractViolation(PoisonCertError, ValueError):
    """Raised when an input breaks a documented precondition or invariant."""
    pass


class ConfigurationError(PoisonCertError):
    """Raised when configuration is invalid."""
    pass


class SolverError(PoisonCertError):
    """Raised when the cone program solver fails."""
    pass


class NumericalBreakdown(SolverError):
    """Raised when the Newton system cannot be factored."""

    def __init__(self, message: str, condition: Optional[float] = None, iteration: int = -1):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e}, iteration {iteration})"
        super().__init__(message)
        self.condition = condition
        self.iteration = iteration


class InfeasibleProgram(SolverError):
    """Raised when a certificate program is reported infeasible or unbounded."""

    def __init__(self, message: str, status: str = "infeasible", task_index: Optional[int] = None):
        super().__init__(message)
        self.status = status
        self.task_index = task_index


class ConvergenceError(PoisonCertError):
    """Raised when relative value iteration runs out of sweeps."""

    def __init__(self, message: str, bracket: Tuple[float, float]):
        super().__init__(f"{message} (last gain bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])")
        self.bracket = bracket


class SimulationError(PoisonCertError):
    """Raised when a poisoned trajectory cannot continue."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


class DominanceViolation(PoisonCertError):
    """Raised when a simulated attack beats the certificate of record."""
    pass


class DataError(PoisonCertError):
    """Raised when a feature table or processed dataset is malformed."""

    def __init__(self, message: str, rank: Optional[int] = None):
        super().__init__(message)
        self.rank = rank
