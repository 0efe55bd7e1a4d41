"""Matrix norms and inner products used throughout the lab."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from robustlab.types import FloatArray


@dataclass(frozen=True)
class Norm:
    """Named matrix or vector norm."""

    name: str
    func: Callable[[FloatArray], float]

    def __call__(self, x: FloatArray) -> float:
        """Compute norm."""
        return self.func(x)


@dataclass(frozen=True)
class InnerProduct:
    """Named inner product."""

    name: str
    func: Callable[[FloatArray, FloatArray], float]

    def __call__(self, x: FloatArray, y: FloatArray) -> float:
        """Compute inner product."""
        return self.func(x, y)

    def cosine(self, x: FloatArray, y: FloatArray) -> float:
        """⟨x, y⟩ / (‖x‖‖y‖); NaN when either argument is zero."""
        denom = np.sqrt(self(x, x) * self(y, y))
        if denom == 0.0:
            return float("nan")
        return self(x, y) / float(denom)


FROBENIUS_INNER_PRODUCT = InnerProduct(
    name="⟨·,·⟩_F",
    func=lambda x, y: float(np.sum(x * y)),
)

FROBENIUS_NORM = Norm(name="‖·‖_F", func=lambda x: float(np.linalg.norm(x)))

# Largest singular value; for symmetric PSD input this is λ_max.
OPERATOR_NORM = Norm(name="‖·‖_op", func=lambda x: float(np.linalg.norm(x, ord=2)))


def frobenius_sq(matrix: FloatArray) -> float:
    """‖A‖_F²."""
    return FROBENIUS_INNER_PRODUCT(matrix, matrix)


def symmetric_op_norm(matrix: FloatArray) -> float:
    """Spectral norm of a symmetric matrix via its eigenvalues."""
    if matrix.size == 0:
        return 0.0
    eigenvalues = np.linalg.eigvalsh(matrix)
    return float(np.max(np.abs(eigenvalues)))
