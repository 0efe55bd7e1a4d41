"""Numerical engine: spectra, quadrature, fixed points, operators and the trust-region solver."""

from robustlab.engine.fixed_points import (
    ConvergenceMetrics,
    ConvergenceResult,
    ConvergenceStatus,
    FixedPointIterator,
)
from robustlab.engine.norms import FROBENIUS_NORM, OPERATOR_NORM, frobenius_sq, symmetric_op_norm
from robustlab.engine.operators import GramOperator, Operator, power_iteration
from robustlab.engine.quadrature import GaussHermiteRule, bivariate_expectations, gaussian_expectation
from robustlab.engine.spectral import (
    alignment,
    best_rank_approximation,
    check_psd,
    flatness,
    frobenius_truncated,
    psd_sqrt,
)
from robustlab.engine.trust_region import TrustRegionSolution, solve_trust_region

__all__ = [
    # Fixed points
    "ConvergenceMetrics",
    "ConvergenceResult",
    "ConvergenceStatus",
    "FixedPointIterator",
    # Norms
    "FROBENIUS_NORM",
    "OPERATOR_NORM",
    "frobenius_sq",
    "symmetric_op_norm",
    # Operators
    "Operator",
    "GramOperator",
    "power_iteration",
    # Quadrature
    "GaussHermiteRule",
    "gaussian_expectation",
    "bivariate_expectations",
    # Spectral helpers
    "alignment",
    "best_rank_approximation",
    "check_psd",
    "flatness",
    "frobenius_truncated",
    "psd_sqrt",
    # Trust region
    "TrustRegionSolution",
    "solve_trust_region",
]
