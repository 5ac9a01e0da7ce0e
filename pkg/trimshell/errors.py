"""
Exception hierarchy for TRIMSHELL.

Every error raised by the package derives from `TrimShellError` and from the builtin
exception a numpy/scipy user would expect (`ValueError` for bad input,
`RuntimeError` for numerical failures), so either can be caught.
"""

from typing import Optional


class TrimShellError(Exception):
    """Base class for all package errors."""


class DomainError(TrimShellError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedOrderError(TrimShellError, ValueError):
    """A derivative order the spline space cannot provide was requested."""


class SingularChartError(TrimShellError, ValueError):
    """The surface chart is degenerate (vanishing ||a1 x a2||)."""


class StabilizationInfeasibleError(TrimShellError, RuntimeError):
    """A small cut element has no large neighbor to borrow polynomials from."""

    def __init__(self, message: str, element: Optional[tuple] = None):
        super().__init__(message)
        self.element = element


class ConfigurationError(TrimShellError, ValueError):
    """Invalid experiment, boundary-condition or config-file setup."""


class IndefiniteLumpedMassError(TrimShellError, ValueError):
    """A row-sum lumped mass entry is not strictly positive."""

    def __init__(self, message: str, dof: int, value: float):
        super().__init__(message)
        self.dof = dof
        self.value = value


class SolverError(TrimShellError, RuntimeError):
    """A linear or eigen solver failed to converge or to factorize."""


class InstabilityError(TrimShellError, RuntimeError):
    """An explicit time integration blew up."""

    def __init__(self, message: str, step: int, time: float):
        super().__init__(message)
        self.step = step
        self.time = time


class ModelValidityWarning(UserWarning):
    """The shell model or a discretization assumption is outside its validity range."""
