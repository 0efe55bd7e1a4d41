"""Population second moments of the random-features model.

For hidden weights W (rows w_j) and activation σ, with x ~ N(0, I_d):

    U_jk = E[σ(xᵀw_j) σ(xᵀw_k)]
    v_j  = E[f⋆(x) σ(xᵀw_j)]
    C_jk = (w_jᵀw_k) E[σ′(xᵀw_j) σ′(xᵀw_k)]

For σ(t) = t² + s these have closed forms in Θ = WWᵀ and the row norms
n_j = ‖w_j‖²:

    U = 2 Θ∘Θ + (n + s)(n + s)ᵀ
    v_j = 2 w_jᵀBw_j + (trace(B) + b₀)(n_j + s)
    C = 4 Θ∘Θ

Other activations are integrated numerically (see engine.quadrature). The
Monte-Carlo oracle is an independent brute-force estimate used in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import linalg

from robustlab.activation import ActivationProfile, ScaleConstants
from robustlab.engine.norms import symmetric_op_norm
from robustlab.engine.quadrature import (
    DEFAULT_BIVARIATE_NODES,
    DEFAULT_NODES,
    bivariate_expectations,
    scaled_quadratic_moments,
)
from robustlab.exceptions import InvalidInputError, NumericalFailureError
from robustlab.model import GroundTruth, NeuronEnsemble
from robustlab.types import FloatArray
from robustlab.utils.logging import get_logger
from robustlab.utils.rng import batch_rng

logger = get_logger(__name__)

PSEUDO_INVERSE_THRESHOLD = 1e-10
MC_BATCH_SIZE = 4096


class PopulationMethod(str, Enum):
    """How a PopulationMatrices object was computed."""

    CLOSED_FORM_QUADRATIC = "closed-form-quadratic"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class PopulationMatrices:
    """U, v, C for one ensemble; standard errors only for Monte-Carlo."""

    u: FloatArray
    v: FloatArray
    c: FloatArray
    method: PopulationMethod
    u_se: FloatArray | None = None
    v_se: FloatArray | None = None
    c_se: FloatArray | None = None
    n_samples: int | None = None

    @property
    def width(self) -> int:
        return int(self.v.size)


@dataclass(frozen=True)
class LinearizedMatrices:
    """Linearizations of U and C.

    A₀ = λ̄I + λ₁²Θ,  A₁ = A₀ + (κ/d)11ᵀ,  U₀ = A₁ + μμᵀ,
    D₀ = λ̄′I + (κ′/d + λ₁²)Θ,  C₀ = D₀ + (2κ/d)11ᵀ,  μ_i = λ₂(‖w_i‖² − 1)/2.
    """

    u0: FloatArray
    c0: FloatArray
    a0: FloatArray
    a1: FloatArray
    d0: FloatArray
    mu: FloatArray


PairIndex = tuple[FloatArray, FloatArray]


def _offdiagonal_pairs(
    ensemble: NeuronEnsemble,
) -> tuple[FloatArray, FloatArray, FloatArray, PairIndex]:
    norms = ensemble.sq_norms
    rows, cols = np.triu_indices(ensemble.width, k=1)
    return norms[rows], norms[cols], ensemble.theta[rows, cols], (rows, cols)


def _scaled_square_means(
    norms: FloatArray, profile: ActivationProfile, nodes: int, use_deriv: bool
) -> FloatArray:
    target = profile.deriv if use_deriv else profile.eval
    ones = np.ones_like(norms)
    zeros = np.zeros_like(norms)

    def squared(t: FloatArray) -> FloatArray:
        out: FloatArray = target(t) ** 2
        return out

    # E[σ(√n G)²] = E[(0·G² + 1) σ²(√n G)]
    return scaled_quadratic_moments(squared, np.sqrt(norms), zeros, ones, nodes, profile.breakpoints)


def _symmetric_from_pairs(
    diagonal: FloatArray, values: FloatArray, index: PairIndex
) -> FloatArray:
    out = np.diag(diagonal)
    rows, cols = index
    out[rows, cols] = values
    out[cols, rows] = values
    return out


def population_u(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    nodes: int = DEFAULT_BIVARIATE_NODES,
) -> FloatArray:
    """U_jk = E[σ(xᵀw_j)σ(xᵀw_k)]."""
    if profile.quadratic_shift is not None:
        shifted = ensemble.sq_norms + profile.quadratic_shift
        out: FloatArray = 2.0 * ensemble.theta**2 + np.outer(shifted, shifted)
        return out

    diagonal = _scaled_square_means(ensemble.sq_norms, profile, DEFAULT_NODES, use_deriv=False)
    var_a, var_b, cov, index = _offdiagonal_pairs(ensemble)
    values = bivariate_expectations(profile.eval, profile.eval, var_a, var_b, cov, nodes)
    return _symmetric_from_pairs(diagonal, values, index)


def population_c(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    nodes: int = DEFAULT_BIVARIATE_NODES,
) -> FloatArray:
    """C_jk = (w_jᵀw_k) E[σ′(xᵀw_j)σ′(xᵀw_k)], the gradient Gram matrix."""
    if profile.quadratic_shift is not None:
        out: FloatArray = 4.0 * ensemble.theta**2
        return out

    norms = ensemble.sq_norms
    diagonal = norms * _scaled_square_means(norms, profile, DEFAULT_NODES, use_deriv=True)
    var_a, var_b, cov, index = _offdiagonal_pairs(ensemble)
    values = cov * bivariate_expectations(profile.deriv, profile.deriv, var_a, var_b, cov, nodes)
    return _symmetric_from_pairs(diagonal, values, index)


def population_v(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    nodes: int = DEFAULT_NODES,
) -> FloatArray:
    """v_j = E[f⋆(x)σ(xᵀw_j)].

    Conditioning x on G = xᵀw_j/‖w_j‖ leaves
    E[f⋆ | G] = a_j G² + trace(B) − a_j + b₀ with a_j = w_jᵀBw_j/‖w_j‖², so
    v_j = E[(a_j G² + c_j) σ(‖w_j‖G)] is a one-dimensional integral.
    """
    weights = ensemble.weights
    quad_forms = np.einsum("ij,jk,ik->i", weights, ground_truth.b_matrix, weights)
    norms = ensemble.sq_norms
    mean = ground_truth.mean

    if profile.quadratic_shift is not None:
        out: FloatArray = 2.0 * quad_forms + mean * (norms + profile.quadratic_shift)
        return out

    zero = norms == 0.0
    if np.any(zero) and not ground_truth.is_centered and float(profile.eval(np.zeros(1))[0]) != 0.0:
        raise InvalidInputError("zero neuron against an uncentered target", zero_rows=int(zero.sum()))
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(zero, 0.0, quad_forms / norms)
    c = ground_truth.trace - a + ground_truth.offset
    return scaled_quadratic_moments(profile.eval, np.sqrt(norms), a, c, nodes, profile.breakpoints)


def population_matrices(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    bivariate_nodes: int = DEFAULT_BIVARIATE_NODES,
    nodes: int = DEFAULT_NODES,
) -> PopulationMatrices:
    """U, v and C with the method tag of the path taken."""
    method = (
        PopulationMethod.CLOSED_FORM_QUADRATIC
        if profile.is_quadratic
        else PopulationMethod.QUADRATURE
    )
    matrices = PopulationMatrices(
        u=population_u(ensemble, profile, bivariate_nodes),
        v=population_v(ensemble, profile, ground_truth, nodes),
        c=population_c(ensemble, profile, bivariate_nodes),
        method=method,
    )
    logger.debug(f"Assembled population matrices: m={ensemble.width}, method={method.value}")
    return matrices


def linearized(ensemble: NeuronEnsemble, constants: ScaleConstants) -> LinearizedMatrices:
    """Assemble A₀, A₁, U₀, D₀, C₀ and μ exactly as defined."""
    m = ensemble.width
    d = constants.dim
    theta = ensemble.theta
    eye = np.eye(m)
    ones = np.ones((m, m))

    a0 = constants.lambda_bar * eye + constants.lambda1**2 * theta
    a1 = a0 + (constants.kappa / d) * ones
    mu = constants.lambda2 * (ensemble.sq_norms - 1.0) / 2.0
    u0 = a1 + np.outer(mu, mu)
    d0 = constants.lambda_bar_prime * eye + (constants.kappa_prime / d + constants.lambda1**2) * theta
    c0 = d0 + (2.0 * constants.kappa / d) * ones
    return LinearizedMatrices(u0=u0, c0=c0, a0=a0, a1=a1, d0=d0, mu=mu)


def linearization_errors(
    ensemble: NeuronEnsemble,
    population: PopulationMatrices,
    constants: ScaleConstants,
) -> dict[str, float]:
    """‖U − U₀‖_op, ‖C − C₀‖_op and ‖v − (τ/√d)1‖, which vanish as d grows."""
    lin = linearized(ensemble, constants)
    tau_term = constants.tau / np.sqrt(constants.dim)
    return {
        "u_error": symmetric_op_norm(population.u - lin.u0),
        "c_error": symmetric_op_norm(population.c - lin.c0),
        "v_error": float(np.linalg.norm(population.v - tau_term)),
    }


@dataclass(frozen=True)
class RidgeResolvent:
    """Solver for (U + λI)z = r together with P_λ = I − (U + λI)⁻¹U.

    Solves use a Cholesky factorization of U + λI. At λ = 0 a U whose smallest
    eigenvalue is below 1e-10·‖U‖_op falls back to the pseudo-inverse
    (``pseudo_inverse`` is then set and P_0 is the projector onto ker U).
    """

    u: FloatArray
    ridge: float
    pseudo_inverse: bool = False

    @cached_property
    def _spectrum(self) -> tuple[FloatArray, FloatArray]:
        eigenvalues, eigenvectors = np.linalg.eigh(self.u)
        return np.maximum(eigenvalues, 0.0), eigenvectors

    @cached_property
    def _cholesky(self) -> tuple[FloatArray, bool]:
        shifted = self.u + self.ridge * np.eye(self.u.shape[0])
        factor: tuple[FloatArray, bool] = linalg.cho_factor(shifted, lower=True)
        return factor

    @property
    def threshold(self) -> float:
        return PSEUDO_INVERSE_THRESHOLD * float(self._spectrum[0].max(initial=0.0))

    def solve(self, rhs: FloatArray) -> FloatArray:
        """(U + λI)⁻¹ rhs, or U⁺ rhs on the pseudo-inverse path."""
        if self.pseudo_inverse:
            eigenvalues, eigenvectors = self._spectrum
            keep = eigenvalues > self.threshold
            inverse = np.where(keep, 1.0 / np.where(keep, eigenvalues, 1.0), 0.0)
            out: FloatArray = eigenvectors @ (inverse * (eigenvectors.T @ rhs))
        else:
            out = linalg.cho_solve(self._cholesky, rhs)
        if not np.all(np.isfinite(out)):
            raise NumericalFailureError("ridge solve produced non-finite values", ridge=self.ridge)
        return out

    @property
    def shrinkage(self) -> FloatArray:
        """Eigenvalues λ/(λ + λ_i(U)) of P_λ, in the eigenbasis of U."""
        eigenvalues, _ = self._spectrum
        if self.pseudo_inverse:
            return (eigenvalues <= self.threshold).astype(np.float64)
        return self.ridge / (self.ridge + eigenvalues)

    @property
    def projector(self) -> FloatArray:
        """P_λ = I − (U + λI)⁻¹U (symmetric, eigenvalues in [0, 1])."""
        _, eigenvectors = self._spectrum
        out: FloatArray = (eigenvectors * self.shrinkage) @ eigenvectors.T
        return out

    def apply_projector(self, x: FloatArray) -> FloatArray:
        _, eigenvectors = self._spectrum
        out: FloatArray = eigenvectors @ (self.shrinkage * (eigenvectors.T @ x))
        return out

    def projector_traces(self, c: FloatArray) -> tuple[float, float]:
        """(trace(P_λ²U), trace(P_λ²C))."""
        eigenvalues, eigenvectors = self._spectrum
        p_sq = self.shrinkage**2
        c_diag = np.einsum("ji,jk,ki->i", eigenvectors, c, eigenvectors)
        return float(np.sum(p_sq * eigenvalues)), float(np.sum(p_sq * c_diag))


def ridge_resolvent(u: FloatArray, ridge: float) -> RidgeResolvent:
    """Factor U + λI, switching to the pseudo-inverse for a singular U at λ = 0."""
    if ridge < 0.0:
        raise InvalidInputError("ridge must be nonnegative", ridge=ridge)
    resolvent = RidgeResolvent(u=u, ridge=ridge)
    if ridge == 0.0:
        eigenvalues = resolvent._spectrum[0]
        if eigenvalues.size and eigenvalues.min() <= resolvent.threshold:
            logger.warning("U is numerically singular at λ=0, using pseudo-inverse")
            return RidgeResolvent(u=u, ridge=ridge, pseudo_inverse=True)
    else:
        try:
            resolvent._cholesky  # noqa: B018
        except linalg.LinAlgError:
            logger.warning(f"Cholesky of U + λI failed at λ={ridge:g}, using pseudo-inverse")
            return RidgeResolvent(u=u, ridge=ridge, pseudo_inverse=True)
    return resolvent


def mc_oracle_moments(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    n_samples: int,
    seed: int,
    batch_size: int = MC_BATCH_SIZE,
) -> PopulationMatrices:
    """Plain Monte-Carlo estimates of U, v, C with per-entry standard errors.

    Samples are drawn in fixed batches (batch b uses its own child stream of
    ``seed``) and reduced in batch order, so the result depends only on
    (ensemble, n_samples, seed, batch_size).
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be at least 1", n_samples=n_samples)

    m = ensemble.width
    weights = ensemble.weights
    sums = {name: np.zeros((m, m)) for name in ("u", "u2", "c", "c2")}
    v_sum = np.zeros(m)
    v_sq = np.zeros(m)

    n_batches = -(-n_samples // batch_size)
    for index in range(n_batches):
        size = min(batch_size, n_samples - index * batch_size)
        x = batch_rng(seed, index).standard_normal((size, ensemble.dim))
        pre = x @ weights.T
        act = profile.eval(pre)
        grad = profile.deriv(pre)
        target = ground_truth.value(x)

        sums["u"] += act.T @ act
        sums["u2"] += (act**2).T @ (act**2)
        sums["c"] += grad.T @ grad
        sums["c2"] += (grad**2).T @ (grad**2)
        prod = target[:, None] * act
        v_sum += prod.sum(axis=0)
        v_sq += (prod**2).sum(axis=0)

    n = float(n_samples)

    def mean_and_se(total: FloatArray, total_sq: FloatArray) -> tuple[FloatArray, FloatArray]:
        mean = total / n
        if n_samples < 2:
            return mean, np.full_like(mean, np.inf)
        variance = np.maximum(total_sq / n - mean**2, 0.0) * n / (n - 1.0)
        return mean, np.sqrt(variance / n)

    u, u_se = mean_and_se(sums["u"], sums["u2"])
    deriv_mean, deriv_se = mean_and_se(sums["c"], sums["c2"])
    v, v_se = mean_and_se(v_sum, v_sq)
    theta = ensemble.theta
    return PopulationMatrices(
        u=u,
        v=v,
        c=theta * deriv_mean,
        method=PopulationMethod.MONTE_CARLO,
        u_se=u_se,
        v_se=v_se,
        c_se=np.abs(theta) * deriv_se,
        n_samples=n_samples,
    )


def dump_population(matrices: PopulationMatrices, directory: Path, stem: str = "population") -> list[Path]:
    """Write U, v, C as CSV sidecars (17 significant digits)."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, array in (("u", matrices.u), ("v", matrices.v), ("c", matrices.c)):
        path = directory / f"{stem}_{name}.csv"
        np.savetxt(path, np.atleast_2d(array), delimiter=",", fmt="%.17g")
        paths.append(path)
    return paths
