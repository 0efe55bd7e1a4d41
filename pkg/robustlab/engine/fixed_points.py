"""Fixed-point iteration and convergence analysis."""

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from robustlab.types import FloatArray

FixedPointMap = Callable[[FloatArray], FloatArray]


class ConvergenceStatus(Enum):
    """Convergence status."""

    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    DIVERGED = "diverged"


@dataclass
class ConvergenceMetrics:
    """Metrics for convergence analysis."""

    iterations: int
    final_residual: float
    residual_history: list[float] = field(default_factory=list)
    rate: float = 0.0  # Estimated contraction factor
    status: ConvergenceStatus = ConvergenceStatus.MAX_ITERATIONS

    def to_dict(self) -> dict[str, Any]:
        """Export to dictionary."""
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "rate": self.rate,
            "status": self.status.value,
        }


@dataclass
class ConvergenceResult:
    """Result of fixed-point iteration."""

    fixed_point: FloatArray
    metrics: ConvergenceMetrics

    def is_converged(self) -> bool:
        """Check if converged."""
        return self.metrics.status == ConvergenceStatus.CONVERGED


@dataclass
class FixedPointIterator:
    """Plain Picard iteration x_{k+1} = T(x_k).

    Stops when ‖x_{k+1} − x_k‖ < tolerance, when an iterate stops being finite
    (DIVERGED), or after ``max_iterations`` steps.
    """

    operator: FixedPointMap
    max_iterations: int = 10_000
    tolerance: float = 1e-12
    keep_history: bool = False

    def iterate(self, x0: FloatArray) -> ConvergenceResult:
        """Run the iteration from ``x0``."""
        x = np.array(x0, dtype=np.float64, copy=True)
        residual_history: list[float] = []
        residual = float("inf")

        for k in range(self.max_iterations):
            x_next = np.asarray(self.operator(x), dtype=np.float64)
            if not np.all(np.isfinite(x_next)):
                return self._result(x, k + 1, residual, residual_history, ConvergenceStatus.DIVERGED)

            residual = float(np.linalg.norm(x_next - x))
            if self.keep_history:
                residual_history.append(residual)

            x = x_next
            if residual < self.tolerance:
                return self._result(
                    x, k + 1, residual, residual_history, ConvergenceStatus.CONVERGED
                )

        return self._result(
            x, self.max_iterations, residual, residual_history, ConvergenceStatus.MAX_ITERATIONS
        )

    def _result(
        self,
        x: FloatArray,
        iterations: int,
        residual: float,
        history: list[float],
        status: ConvergenceStatus,
    ) -> ConvergenceResult:
        metrics = ConvergenceMetrics(
            iterations=iterations,
            final_residual=residual,
            residual_history=history,
            rate=self._estimate_rate(history),
            status=status,
        )
        return ConvergenceResult(fixed_point=x, metrics=metrics)

    def _estimate_rate(self, residuals: list[float]) -> float:
        """Estimate contraction factor q from consecutive residuals r_{k+1}/r_k."""
        ratios = [
            residuals[i + 1] / residuals[i]
            for i in range(len(residuals) - 1)
            if residuals[i] > 1e-300
        ]
        # The tail is the meaningful part of a linearly convergent sequence.
        return float(np.median(ratios[-10:])) if ratios else 0.0
