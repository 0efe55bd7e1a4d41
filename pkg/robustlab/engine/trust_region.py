"""Exact solver for the Euclidean trust-region subproblem.

Solves

    min  gᵀp + ½ pᵀHp   s.t.  ‖p‖ ≤ radius

for symmetric H given by its eigendecomposition. p* is a global solution iff
there is μ ≥ 0 with (H + μI)p* = −g, μ(radius − ‖p*‖) = 0 and H + μI ⪰ 0.
In the eigenbasis the boundary condition is the secular equation
1/‖p(μ)‖ = 1/radius, solved by safeguarded Newton steps with bisection
fallback. The hard case (g orthogonal to the bottom eigenspace) is finished by
moving along a bottom eigenvector up to the boundary.
"""

from dataclasses import dataclass

import numpy as np

from robustlab.exceptions import InvalidInputError
from robustlab.types import FloatArray

SECULAR_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TrustRegionSolution:
    """Minimizer of the trust-region model."""

    step: FloatArray
    value: float
    multiplier: float
    interior: bool = False
    hard_case: bool = False
    iterations: int = 0


def _model_value(gamma: FloatArray, eigenvalues: FloatArray, coords: FloatArray) -> float:
    return float(gamma @ coords + 0.5 * np.sum(eigenvalues * coords**2))


def solve_trust_region(
    eigenvalues: FloatArray,
    eigenvectors: FloatArray,
    gradient: FloatArray,
    radius: float,
    max_iterations: int = 200,
) -> TrustRegionSolution:
    """Globally minimize gᵀp + ½pᵀHp over the ball ‖p‖ ≤ radius.

    Args:
        eigenvalues: Eigenvalues of H (any order)
        eigenvectors: Matching orthonormal eigenvectors as columns
        gradient: Linear term g
        radius: Ball radius (> 0)
        max_iterations: Cap on secular-equation iterations

    Returns:
        TrustRegionSolution with the step in original coordinates
    """
    if radius <= 0.0:
        raise InvalidInputError("trust-region radius must be positive", radius=radius)

    lam = np.asarray(eigenvalues, dtype=np.float64)
    gamma = eigenvectors.T @ np.asarray(gradient, dtype=np.float64)
    gamma_norm = float(np.linalg.norm(gamma))
    lam_min = float(lam.min())
    spread = max(1.0, float(np.max(np.abs(lam))))

    def finish(
        coords: FloatArray, mu: float, iterations: int, *, interior: bool = False, hard: bool = False
    ) -> TrustRegionSolution:
        return TrustRegionSolution(
            step=eigenvectors @ coords,
            value=_model_value(gamma, lam, coords),
            multiplier=mu,
            interior=interior,
            hard_case=hard,
            iterations=iterations,
        )

    # Interior Newton point
    if lam_min > 0.0:
        newton = -gamma / lam
        if np.linalg.norm(newton) <= radius:
            return finish(newton, 0.0, 0, interior=True)

    mu_low = max(0.0, -lam_min)
    bottom = lam <= lam_min + 1e-12 * spread
    bottom_weight = float(np.linalg.norm(gamma[bottom]))

    # Hard case: the secular function stays bounded at μ = −λ_min.
    if bottom_weight <= 1e-12 * max(gamma_norm, 1e-300) or gamma_norm == 0.0:
        coords = np.zeros_like(gamma)
        rest = ~bottom
        coords[rest] = -gamma[rest] / (lam[rest] + mu_low)
        partial = float(np.linalg.norm(coords))
        if partial <= radius:
            escape = int(np.flatnonzero(bottom)[0])
            coords[escape] += np.sqrt(max(radius**2 - partial**2, 0.0))
            return finish(coords, mu_low, 0, hard=True)

    def step_norm(mu: float) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            value = float(np.linalg.norm(gamma / (lam + mu)))
        return value if np.isfinite(value) else float("inf")

    lower = mu_low
    upper = max(mu_low, gamma_norm / radius - lam_min)
    while step_norm(upper) > radius:
        upper = 2.0 * upper + 1.0

    mu = upper
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        denom = lam + mu
        if np.any(denom <= 0.0):
            mu = 0.5 * (lower + upper)
            continue
        coords = -gamma / denom
        norm = float(np.linalg.norm(coords))
        if abs(norm - radius) <= SECULAR_TOLERANCE * radius:
            break
        if norm > radius:
            lower = mu
        else:
            upper = mu
        # Newton step on φ(μ) = 1/‖p(μ)‖ − 1/radius
        w_sq = float(np.sum(gamma**2 / denom**3))
        candidate = mu + (norm**2 / w_sq) * (norm - radius) / radius
        mu = candidate if lower < candidate < upper else 0.5 * (lower + upper)
        if upper - lower <= 1e-15 * max(1.0, upper):
            break

    coords = -gamma / (lam + mu)
    return finish(coords, mu, iterations)
