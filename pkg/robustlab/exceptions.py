"""Exception hierarchy for robustlab.

Exceptions are raised for "cannot even start" conditions such as malformed
matrices, out-of-range arguments or an invalid experiment configuration.
Failures of a single row inside a sweep are captured in result objects
(ResultRow.error) instead, so one bad seed never aborts a whole experiment.

Exception Hierarchy:
    RobustLabError (base)
    ├── ConfigurationError (experiment configuration issues)
    ├── InvalidInputError (bad arguments)
    │   ├── NotPositiveSemidefiniteError (asymmetric or indefinite B / Γ)
    │   └── UndefinedAlignmentError (zero B or Γ)
    ├── NumericalFailureError (non-finite quadrature / linear algebra)
    │   └── IterationLimitError (fixed-point iteration cap reached)
    ├── DegenerateActivationError (affine σ where λ̄ > 0 is needed)
    ├── UnsupportedActivationError (NT/NTL with non-quadratic σ)
    └── NotApplicableError (no trade-off identity for a regime)

Usage:
    >>> from robustlab.exceptions import InvalidInputError
    >>> raise InvalidInputError("delta must be positive", delta=-1.0)
"""

from typing import Any


class RobustLabError(Exception):
    """Base exception for all robustlab errors.

    Attributes:
        message: Human-readable error message
        details: Optional dictionary with additional error details
    """

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        """Format error message with details."""
        if not self.details:
            return self.message

        details_str = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{self.message} ({details_str})"


class ConfigurationError(RobustLabError):
    """Invalid or incomplete experiment configuration.

    Example:
        >>> raise ConfigurationError("m_grid must be nonempty", key="m_grid")
    """


class InvalidInputError(RobustLabError, ValueError):
    """An argument is outside the domain of an operation.

    Example:
        >>> raise InvalidInputError("Hermite index out of range", k=5, allowed="0..3")
    """


class NotPositiveSemidefiniteError(InvalidInputError):
    """A matrix that must be symmetric PSD is not (within 1e-10)."""


class UndefinedAlignmentError(InvalidInputError):
    """Alignment trace(BΓ)/(‖B‖_F‖Γ‖_F) requested with a zero matrix."""


class NumericalFailureError(RobustLabError, ArithmeticError):
    """Quadrature or linear algebra produced a non-finite value."""


class IterationLimitError(NumericalFailureError):
    """A fixed-point iteration hit its cap before meeting the tolerance.

    Example:
        >>> raise IterationLimitError("Silverstein iteration did not converge",
        ...                           iterations=10_000, last_residual=3e-9)
    """

    @property
    def last_residual(self) -> float:
        """Residual of the final iterate."""
        return float(self.details.get("last_residual", float("nan")))


class DegenerateActivationError(RobustLabError):
    """Activation is purely affine, so λ̄ = 0 and ψ₁, ψ₂ are undefined."""


class UnsupportedActivationError(RobustLabError):
    """Regime only defined for the quadratic activation."""


class NotApplicableError(RobustLabError):
    """Operation does not apply to the requested regime.

    Example:
        >>> raise NotApplicableError("no trade-off identity", regime="INIT")
    """


__all__ = [
    "RobustLabError",
    "ConfigurationError",
    "InvalidInputError",
    "NotPositiveSemidefiniteError",
    "UndefinedAlignmentError",
    "NumericalFailureError",
    "IterationLimitError",
    "DegenerateActivationError",
    "UnsupportedActivationError",
    "NotApplicableError",
]
