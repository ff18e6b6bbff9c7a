"""
Exception hierarchy for the lab.

Every error also derives from the closest builtin so callers that only know
``ValueError`` / ``ArithmeticError`` keep working.
"""

from __future__ import annotations


class LabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(LabError, ValueError):
    """Invalid run configuration, grid, or test-function support."""


class DomainError(LabError, ValueError):
    """A mathematical precondition of an operation is violated."""


class PreconditionError(DomainError):
    """R is below the computed threshold R1 of the pairing lower bound."""

    def __init__(self, message: str, R1: float):
        super().__init__(message)
        self.R1 = R1


class SymbolEvaluationError(LabError, ValueError):
    """A periodic symbol returned a non-finite value at a quadrature node."""

    def __init__(self, message: str, theta: float):
        super().__init__(message)
        self.theta = theta


class InvalidMollifierError(LabError, ValueError):
    """The cutoff family fails a certified inequality."""


class InsufficientDataError(LabError, ValueError):
    """Too few usable rows for a fit."""


class NonFiniteFieldError(LabError, ArithmeticError):
    """The nonlinear substep produced inf/nan; the step controller treats it as growth."""
