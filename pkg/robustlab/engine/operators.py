"""Implicit linear operators and the power method."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from robustlab.exceptions import InvalidInputError
from robustlab.types import FloatArray
from robustlab.utils.rng import make_rng


@dataclass
class Operator(ABC):
    """Abstract symmetric linear operator T: ℝⁿ → ℝⁿ."""

    dim: int
    name: str = "Operator"

    @abstractmethod
    def apply(self, x: FloatArray) -> FloatArray:
        """Apply operator: T(x)."""

    def __call__(self, x: FloatArray) -> FloatArray:
        """Syntactic sugar: T(x)."""
        return self.apply(x)

    def rayleigh_quotient(self, x: FloatArray) -> float:
        """xᵀT(x) / xᵀx."""
        return float(x @ self.apply(x) / (x @ x))


@dataclass
class GramOperator(Operator):
    """Empirical second moment J = GᵀG/n of n sampled rows, never formed.

    ``rows`` is the fixed n×d sample; J·x costs two matrix-vector products.
    """

    rows: FloatArray = field(default_factory=lambda: np.zeros((0, 0)))
    name: str = "Gram"

    def apply(self, x: FloatArray) -> FloatArray:
        result: FloatArray = self.rows.T @ (self.rows @ x) / self.rows.shape[0]
        return result

    def trace(self) -> float:
        """trace(J) = mean squared row norm."""
        return float(np.mean(np.sum(self.rows**2, axis=1)))


@dataclass(frozen=True)
class PowerIterationResult:
    """Dominant eigenpair estimate."""

    eigenvalue: float
    vector: FloatArray
    iterations: int
    converged: bool
    zero_operator: bool = False


def power_iteration(
    operator: Operator,
    max_iterations: int = 1000,
    tolerance: float = 1e-8,
    seed: int = 0,
) -> PowerIterationResult:
    """Dominant eigenpair of a symmetric PSD operator.

    Stops when the Rayleigh quotient changes by less than
    ``tolerance · max(1, |λ|)`` between iterations. An operator that maps the
    start vector to zero is reported as the zero operator with eigenvalue 0
    and the (arbitrary) unit start vector.
    """
    if max_iterations < 1:
        raise InvalidInputError("power iteration needs at least one step", max_iterations=max_iterations)

    rng = make_rng(seed)
    x = rng.standard_normal(operator.dim)
    x /= np.linalg.norm(x)

    eigenvalue = 0.0
    for iteration in range(1, max_iterations + 1):
        y = operator.apply(x)
        y_norm = float(np.linalg.norm(y))
        if y_norm == 0.0:
            return PowerIterationResult(
                eigenvalue=0.0, vector=x, iterations=iteration, converged=True, zero_operator=True
            )

        updated = float(x @ y)
        x = y / y_norm
        if abs(updated - eigenvalue) < tolerance * max(1.0, abs(updated)):
            return PowerIterationResult(
                eigenvalue=operator.rayleigh_quotient(x),
                vector=x,
                iterations=iteration,
                converged=True,
            )
        eigenvalue = updated

    return PowerIterationResult(
        eigenvalue=operator.rayleigh_quotient(x),
        vector=x,
        iterations=max_iterations,
        converged=False,
    )
