"""Exact finite-dimensional evaluation of every learning regime.

Each evaluator returns a :class:`RegimeEvaluation` with the normalized errors

    egen = E(f⋆ − f)² / (2‖B‖_F²),      erob = 𝔖(f)² / 𝔖(f⋆)² = 𝔖(f)² / (4‖B‖_F²),

computed in closed form from the population matrices (RF family) or from
spectral projections (SGD limit, NT family). The fitted predictors travel with
the evaluation so the Monte-Carlo cross-check can audit them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from robustlab.activation import ActivationProfile, get_activation
from robustlab.audit import (
    DEFAULT_BATCH,
    MonteCarloEstimate,
    Predictor,
    dirichlet_energy,
    gradient_check,
    mc_mean,
)
from robustlab.engine.norms import frobenius_sq
from robustlab.engine.spectral import best_rank_approximation
from robustlab.exceptions import (
    InvalidInputError,
    NumericalFailureError,
    UnsupportedActivationError,
)
from robustlab.model import GroundTruth, NeuronEnsemble
from robustlab.population import PopulationMatrices, population_matrices, ridge_resolvent
from robustlab.types import FloatArray, Regime
from robustlab.utils.logging import get_logger, structured_log
from robustlab.utils.rng import derive_seed, make_rng

logger = get_logger(__name__)

NT_RANK_THRESHOLD = 1e-10


@dataclass(frozen=True)
class RegimeEvaluation:
    """Exact (egen, erob) of one fitted regime.

    ``model`` is the predictor whose generalization error is ``egen``;
    ``robustness_model`` is the one whose normalized Dirichlet energy is
    ``erob``. They differ only for NT (see :func:`fit_nt`) and NTL, where
    robustness is measured on the trained correction term.
    """

    regime: Regime
    egen: float
    erob: float
    model: Predictor
    robustness_model: Predictor
    width: int
    ridge: float | None = None
    seeds: dict[str, int] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    pseudo_inverse: bool = False

    @property
    def tradeoff(self) -> float:
        """egen + erob."""
        return self.egen + self.erob

    def to_dict(self) -> dict[str, Any]:
        scalars = {k: v for k, v in self.params.items() if isinstance(v, int | float)}
        return {
            "regime": self.regime.value,
            "egen": self.egen,
            "erob": self.erob,
            "m": self.width,
            "ridge": self.ridge,
            "seeds": dict(self.seeds),
            "pseudo_inverse": self.pseudo_inverse,
            "params": scalars,
        }


def _denominators(ground_truth: GroundTruth) -> tuple[float, float]:
    frob_sq = ground_truth.frob_sq
    if frob_sq == 0.0:
        raise InvalidInputError("normalized errors are undefined for B = 0")
    return 2.0 * frob_sq, 4.0 * frob_sq


def _population(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    population: PopulationMatrices | None,
) -> PopulationMatrices:
    if population is None:
        return population_matrices(ensemble, profile, ground_truth)
    if population.width != ensemble.width:
        raise InvalidInputError("population matrices do not match the ensemble", m=ensemble.width)
    return population


def sample_output_init(m: int, seed: int) -> FloatArray:
    """a⁰ ~ N(0, I_m/m)."""
    if m < 1:
        raise InvalidInputError("width must be at least 1", m=m)
    out: FloatArray = make_rng(seed).standard_normal(m) / math.sqrt(m)
    return out


def _output_init(m: int, init_seed: int, init_weights: FloatArray | None) -> FloatArray:
    if init_weights is None:
        return sample_output_init(m, init_seed)
    a0 = np.asarray(init_weights, dtype=np.float64)
    if a0.shape != (m,):
        raise InvalidInputError("init weights have the wrong shape", shape=a0.shape, m=m)
    return a0


def _residual_sq(ground_truth: GroundTruth, population: PopulationMatrices, z: FloatArray) -> float:
    """E(f⋆ − zᵀσ(Wx))² = ‖f⋆‖² − 2vᵀz + zᵀUz (round-off clamped at 0)."""
    value = ground_truth.norm_sq - 2.0 * float(population.v @ z) + float(z @ population.u @ z)
    return max(value, 0.0)


def eval_sgd_limit(ground_truth: GroundTruth, m: int) -> RegimeEvaluation:
    """Infinite-data SGD limit: the best rank-m approximation B_m of B.

    erob = ‖B‖²_{F,m}/‖B‖_F² and egen = 1 − erob, so they sum to one exactly.
    """
    if m < 1:
        raise InvalidInputError("width must be at least 1", m=m)
    frob_sq = ground_truth.frob_sq
    if frob_sq == 0.0:
        raise InvalidInputError("normalized errors are undefined for B = 0")
    erob = ground_truth.summary.frob_trunc_sq(m) / frob_sq
    b_m = best_rank_approximation(ground_truth.b_matrix, m)
    offset = ground_truth.mean - float(np.trace(b_m))
    model = Predictor.quadratic(b_m, offset, name="sgd_limit")
    return RegimeEvaluation(
        regime=Regime.SGD_LIMIT,
        egen=1.0 - erob,
        erob=erob,
        model=model,
        robustness_model=model,
        width=m,
        params={"b_m": b_m, "offset": offset},
    )


def fit_rf(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    ridge: float = 0.0,
    population: PopulationMatrices | None = None,
) -> RegimeEvaluation:
    """Random features with a trained output layer z = (U + λI)⁻¹v."""
    gen_den, rob_den = _denominators(ground_truth)
    pop = _population(ensemble, profile, ground_truth, population)
    resolvent = ridge_resolvent(pop.u, ridge)
    z = resolvent.solve(pop.v)
    model = Predictor.network(ensemble.weights, z, profile, name="rf")
    return RegimeEvaluation(
        regime=Regime.RF if ridge == 0.0 else Regime.RF_RIDGE,
        egen=_residual_sq(ground_truth, pop, z) / gen_den,
        erob=max(float(z @ pop.c @ z), 0.0) / rob_den,
        model=model,
        robustness_model=model,
        width=ensemble.width,
        ridge=ridge,
        seeds={"ensemble": ensemble.seed},
        params={"z": z},
        pseudo_inverse=resolvent.pseudo_inverse,
    )


def fit_rfl(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    ridge: float,
    init_seed: int,
    population: PopulationMatrices | None = None,
    init_weights: FloatArray | None = None,
) -> RegimeEvaluation:
    """Lazy random features: z = z_rf,λ + P_λa⁰ with P_λ = I − (U + λI)⁻¹U.

    ``params`` carries the a⁰-averaged corrections trace(P_λ²U)/m and
    trace(P_λ²C)/m.
    """
    gen_den, rob_den = _denominators(ground_truth)
    pop = _population(ensemble, profile, ground_truth, population)
    m = ensemble.width
    a0 = _output_init(m, init_seed, init_weights)
    resolvent = ridge_resolvent(pop.u, ridge)
    z_rf = resolvent.solve(pop.v)
    z = z_rf + resolvent.apply_projector(a0)
    trace_u, trace_c = resolvent.projector_traces(pop.c)
    model = Predictor.network(ensemble.weights, z, profile, name="rfl")
    return RegimeEvaluation(
        regime=Regime.RFL,
        egen=_residual_sq(ground_truth, pop, z) / gen_den,
        erob=max(float(z @ pop.c @ z), 0.0) / rob_den,
        model=model,
        robustness_model=model,
        width=m,
        ridge=ridge,
        seeds={"ensemble": ensemble.seed, "init": init_seed},
        params={
            "z": z,
            "z_rf": z_rf,
            "a0": a0,
            "trace_p2u": trace_u / m,
            "trace_p2c": trace_c / m,
        },
        pseudo_inverse=resolvent.pseudo_inverse,
    )


def eval_init(
    ensemble: NeuronEnsemble,
    profile: ActivationProfile,
    ground_truth: GroundTruth,
    init_seed: int,
    population: PopulationMatrices | None = None,
    init_weights: FloatArray | None = None,
) -> RegimeEvaluation:
    """Untrained network f_init(x) = a⁰ᵀσ(Wx) with a⁰ ~ N(0, I/m)."""
    gen_den, rob_den = _denominators(ground_truth)
    pop = _population(ensemble, profile, ground_truth, population)
    a0 = _output_init(ensemble.width, init_seed, init_weights)
    model = Predictor.network(ensemble.weights, a0, profile, name="init")
    return RegimeEvaluation(
        regime=Regime.INIT,
        egen=_residual_sq(ground_truth, pop, a0) / gen_den,
        erob=max(float(a0 @ pop.c @ a0), 0.0) / rob_den,
        model=model,
        robustness_model=model,
        width=ensemble.width,
        seeds={"ensemble": ensemble.seed, "init": init_seed},
        params={"a0": a0},
    )


@dataclass(frozen=True)
class NeuronProjection:
    """Orthonormal basis P₁ of range(Wᵀ) from a thin SVD Wᵀ = P₁ΣVᵀ."""

    basis: FloatArray  # d × r
    singular_values: FloatArray  # r
    right_vectors: FloatArray  # m × r

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    @property
    def projector(self) -> FloatArray:
        out: FloatArray = self.basis @ self.basis.T
        return out


def neuron_projection(weights: FloatArray) -> NeuronProjection:
    """Range of Wᵀ, keeping singular values above 1e-10·σ₁."""
    left, singular, right_t = np.linalg.svd(np.asarray(weights).T, full_matrices=False)
    if singular.size == 0 or singular[0] == 0.0:
        raise InvalidInputError("NT fit needs a nonzero weight matrix")
    keep = singular > NT_RANK_THRESHOLD * singular[0]
    return NeuronProjection(
        basis=left[:, keep], singular_values=singular[keep], right_vectors=right_t[keep].T
    )


@dataclass(frozen=True)
class ProjectionNorms:
    """‖P₁ᵀM‖_F², ‖P₁ᵀMP₁‖_F² and the complement ‖P₂ᵀMP₂‖_F²."""

    pure: float
    mixed: float
    complement: float


def projection_norms(matrix: FloatArray, projection: NeuronProjection) -> ProjectionNorms:
    """Norms of the projections of a symmetric M onto range(P₁) and its complement.

    The complement uses ‖M‖² − 2‖P₁ᵀM‖² + ‖P₁ᵀMP₁‖², so P₂ is never formed.
    """
    p1t_m = projection.basis.T @ matrix
    pure = frobenius_sq(p1t_m)
    mixed = frobenius_sq(p1t_m @ projection.basis)
    if projection.rank == matrix.shape[0]:
        complement = 0.0
    else:
        complement = max(frobenius_sq(matrix) - 2.0 * pure + mixed, 0.0)
    return ProjectionNorms(pure=pure, mixed=mixed, complement=complement)


def _require_quadratic(profile: ActivationProfile | None, regime: Regime) -> ActivationProfile:
    if profile is None:
        return get_activation("quadratic")
    if regime.quadratic_only and not profile.is_quadratic:
        raise UnsupportedActivationError(
            f"{regime.value} is defined for the quadratic activation only", activation=profile.name
        )
    return profile


def _nt_matrices(target: FloatArray, projection: NeuronProjection) -> tuple[FloatArray, FloatArray]:
    """(S, S*) for a target matrix M with P = P₁P₁ᵀ.

    S = (PM + MP)/2 is the half-projection fit. S* = PM + MP − PMP is the
    Frobenius minimizer of ‖M − WᵀA − AᵀW‖ over A, whose residual is P₂P₂ᵀMP₂P₂ᵀ.
    The two coincide when M commutes with P.
    """
    p = projection.projector
    pm = p @ target
    half = 0.5 * (pm + pm.T)
    best = pm + pm.T - pm @ p
    return half, 0.5 * (best + best.T)


def _nt_output_weights(target: FloatArray, projection: NeuronProjection) -> FloatArray:
    """A with WᵀA = P₁P₁ᵀM/2, i.e. A = VΣ⁻¹P₁ᵀM/2."""
    scaled = (projection.right_vectors / projection.singular_values) @ projection.basis.T
    out: FloatArray = 0.5 * scaled @ target
    return out


def fit_nt(
    ensemble: NeuronEnsemble,
    ground_truth: GroundTruth,
    profile: ActivationProfile | None = None,
) -> RegimeEvaluation:
    """Neural tangent fit for σ(t) = t², f_nt(x) = 2Σ_j (xᵀa_j)(xᵀw_j) − c.

    erob is that of the half-projection fit WᵀA_nt = P₁P₁ᵀB/2,
    (2‖P₁P₁ᵀB‖² + 2‖P₁ᵀBP₁‖²)/(4‖B‖²); egen is the minimal residual
    2‖P₂ᵀBP₂‖²/(2‖B‖²). ``robustness_model`` is the half-projection predictor
    and ``model`` the residual minimizer; they agree when B commutes with P₁P₁ᵀ.
    """
    _require_quadratic(profile, Regime.NT)
    gen_den, rob_den = _denominators(ground_truth)
    projection = neuron_projection(ensemble.weights)
    norms = projection_norms(ground_truth.b_matrix, projection)
    half, best = _nt_matrices(ground_truth.b_matrix, projection)

    robust = Predictor.quadratic(half, ground_truth.mean - float(np.trace(half)), name="nt")
    model = Predictor.quadratic(best, ground_truth.mean - float(np.trace(best)), name="nt_best")
    return RegimeEvaluation(
        regime=Regime.NT,
        egen=2.0 * norms.complement / gen_den,
        erob=(2.0 * norms.pure + 2.0 * norms.mixed) / rob_den,
        model=model,
        robustness_model=robust,
        width=ensemble.width,
        seeds={"ensemble": ensemble.seed},
        params={
            "rank": projection.rank,
            "a_nt": _nt_output_weights(ground_truth.b_matrix, projection),
            "c_nt": float(np.trace(half)) - ground_truth.mean,
            "pure_sq": norms.pure,
            "mixed_sq": norms.mixed,
        },
    )


def fit_ntl(
    ensemble: NeuronEnsemble,
    ground_truth: GroundTruth,
    init_seed: int,
    init_weights: FloatArray | None = None,
    profile: ActivationProfile | None = None,
) -> RegimeEvaluation:
    """Lazy NT: f_init plus an NT correction fitted to B̃ = B − WᵀQW, Q = diag(a⁰).

    egen is that of f_init + correction and equals fit_nt's egen since
    P₂ᵀWᵀ = 0. erob is the Dirichlet energy of the correction alone,
    (2‖P₁P₁ᵀB̃‖² + 2‖P₁ᵀB̃P₁‖²)/(4‖B‖²).
    """
    quadratic = _require_quadratic(profile, Regime.NTL)
    shift = float(quadratic.quadratic_shift or 0.0)
    gen_den, rob_den = _denominators(ground_truth)
    m = ensemble.width
    a0 = _output_init(m, init_seed, init_weights)
    w = ensemble.weights

    init_matrix = (w.T * a0) @ w
    init_offset = shift * float(a0.sum())
    b_tilde = ground_truth.b_matrix - init_matrix
    b_tilde = 0.5 * (b_tilde + b_tilde.T)
    residual_mean = ground_truth.mean - (float(np.trace(init_matrix)) + init_offset)

    projection = neuron_projection(w)
    norms = projection_norms(b_tilde, projection)
    half, best = _nt_matrices(b_tilde, projection)

    correction = Predictor.quadratic(half, residual_mean - float(np.trace(half)), name="ntl_correction")
    full = init_matrix + best
    model = Predictor.quadratic(
        full, init_offset + residual_mean - float(np.trace(best)), name="ntl"
    )
    return RegimeEvaluation(
        regime=Regime.NTL,
        egen=2.0 * norms.complement / gen_den,
        erob=(2.0 * norms.pure + 2.0 * norms.mixed) / rob_den,
        model=model,
        robustness_model=correction,
        width=m,
        seeds={"ensemble": ensemble.seed, "init": init_seed},
        params={
            "rank": projection.rank,
            "a0": a0,
            "b_tilde": b_tilde,
            "a_ntl": _nt_output_weights(b_tilde, projection),
            "pure_sq": norms.pure,
            "mixed_sq": norms.mixed,
        },
    )


def complement_frobenius_sq(b_matrix: FloatArray, weights: FloatArray) -> float:
    """‖P₂ᵀBP₂‖_F² for the complement of range(Wᵀ)."""
    return projection_norms(np.asarray(b_matrix, dtype=np.float64), neuron_projection(weights)).complement


def ground_truth_norm_check(
    ground_truth: GroundTruth,
    n_samples: int = 20_000,
    seed: int = 0,
    n_se: float = 5.0,
    batch_size: int = DEFAULT_BATCH,
) -> MonteCarloEstimate:
    """Assert E f⋆(x)² = 2‖B‖_F² + (trace(B) + b₀)² by Monte-Carlo."""

    def squared(x: FloatArray) -> FloatArray:
        out: FloatArray = ground_truth.value(x) ** 2
        return out

    estimate = mc_mean(squared, ground_truth.dim, n_samples, seed, batch_size)
    if not estimate.within(ground_truth.norm_sq, n_se):
        raise NumericalFailureError(
            "Monte-Carlo ‖f⋆‖² disagrees with 2‖B‖_F² + mean²",
            exact=ground_truth.norm_sq,
            estimate=estimate.mean,
            se=estimate.se,
        )
    return estimate


@dataclass(frozen=True)
class MonteCarloErrors:
    """Normalized MC estimates of (egen, erob) for one evaluation."""

    egen: MonteCarloEstimate
    erob: MonteCarloEstimate

    def consistent_with(self, evaluation: RegimeEvaluation, n_se: float = 5.0) -> bool:
        return self.egen.within(evaluation.egen, n_se) and self.erob.within(evaluation.erob, n_se)


def _scaled(estimate: MonteCarloEstimate, factor: float) -> MonteCarloEstimate:
    return MonteCarloEstimate(estimate.mean / factor, estimate.se / factor, estimate.n_samples)


def monte_carlo_errors(
    evaluation: RegimeEvaluation,
    ground_truth: GroundTruth,
    n_samples: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH,
) -> MonteCarloErrors:
    """Estimate egen and erob of the fitted predictors from fresh Gaussian samples.

    ``batch_size`` bounds the samples held in memory at once.
    """
    gen_den, rob_den = _denominators(ground_truth)
    for predictor in {id(p): p for p in (evaluation.model, evaluation.robustness_model)}.values():
        check = gradient_check(predictor, seed=derive_seed(seed, "gradient"))
        if not check.passed:
            raise NumericalFailureError(
                "gradient inconsistent with value",
                predictor=predictor.name,
                error=check.max_relative_error,
            )

    model = evaluation.model

    def residual(x: FloatArray) -> FloatArray:
        out: FloatArray = (ground_truth.value(x) - model.value(x)) ** 2
        return out

    egen = mc_mean(residual, ground_truth.dim, n_samples, derive_seed(seed, "egen"), batch_size)
    erob = dirichlet_energy(
        evaluation.robustness_model, n_samples, derive_seed(seed, "erob"), batch_size=batch_size
    )
    result = MonteCarloErrors(egen=_scaled(egen, gen_den), erob=_scaled(erob, rob_den))
    if not result.consistent_with(evaluation):
        structured_log(
            logger,
            "warning",
            "Monte-Carlo estimate outside 5 SE of the exact value",
            phase="regimes",
            regime=evaluation.regime.value,
            egen=evaluation.egen,
            egen_mc=result.egen.mean,
            erob=evaluation.erob,
            erob_mc=result.erob.mean,
        )
    return result
