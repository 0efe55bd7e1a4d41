"""Asymptotic predictions for every regime.

The random-features formulas depend on the activation through the scale
constants (λ̄, κ, τ, λ̄′, κ′) and on the random neurons through two spectral
quantities of A₀ = λ̄I + λ₁²Θ and D₀ = λ̄′I + (κ′/d + λ₁²)Θ:

    ψ₁ = lim trace(A₀⁻¹)/d,      ψ₂ = lim trace(A₀⁻²D₀)/d.

They are estimated either by averaging finite-d traces over neuron draws or
from the Silverstein equation for the limiting spectrum of WWᵀ. Ridge enters
as λ̄ → λ̄ + λ in A₀ only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol

import numpy as np
import sympy as sp

from robustlab.activation import ActivationProfile, ScaleConstants, get_activation, scale_constants
from robustlab.engine.fixed_points import FixedPointIterator
from robustlab.engine.spectral import alignment
from robustlab.exceptions import (
    DegenerateActivationError,
    InvalidInputError,
    IterationLimitError,
    NotApplicableError,
)
from robustlab.model import CovarianceDescriptor, GroundTruth, sample_ensemble
from robustlab.types import FloatArray, Regime
from robustlab.utils.logging import get_logger, structured_log
from robustlab.utils.rng import derive_seed

logger = get_logger(__name__)

LINEAR_TERM_TOLERANCE = 1e-12
SILVERSTEIN_STEP = 1e-5


class PsiMethod(str, Enum):
    FINITE_D_TRACE = "finite-d-trace"
    CLOSED_FORM_QUADRATIC = "closed-form-quadratic"
    SILVERSTEIN = "silverstein"


@dataclass(frozen=True)
class PsiPair:
    """(ψ₁, ψ₂) with the method that produced them."""

    psi1: float
    psi2: float
    method: PsiMethod
    n_rep: int = 0
    psi1_se: float = 0.0
    psi2_se: float = 0.0

    def __post_init__(self) -> None:
        if not (self.psi1 > 0.0 and self.psi2 > 0.0):
            raise InvalidInputError("ψ₁ and ψ₂ must be positive", psi1=self.psi1, psi2=self.psi2)

    def to_dict(self) -> dict[str, Any]:
        return {
            "psi1": self.psi1,
            "psi2": self.psi2,
            "method": self.method.value,
            "n_rep": self.n_rep,
            "psi1_se": self.psi1_se,
            "psi2_se": self.psi2_se,
        }


def _shifted_lambda_bar(profile: ActivationProfile, ridge: float) -> float:
    if ridge < 0.0:
        raise InvalidInputError("ridge must be nonnegative", ridge=ridge)
    lambda_bar = max(profile.norm_sq - profile.lambda1**2, 0.0) + ridge
    if lambda_bar <= LINEAR_TERM_TOLERANCE:
        raise DegenerateActivationError(
            "ψ₁, ψ₂ are undefined for an affine activation", activation=profile.name
        )
    return lambda_bar


def _closed_form(
    profile: ActivationProfile, rho: float, gamma_frob_sq: float, ridge: float
) -> PsiPair:
    # λ₁ = 0 makes A₀ = (λ̄ + λ)I.
    lambda_bar = _shifted_lambda_bar(profile, ridge)
    lambda_bar_prime = profile.deriv_norm_sq
    kappa_prime_over_d = profile.lambda3**2 * gamma_frob_sq / 2.0
    return PsiPair(
        psi1=rho / lambda_bar,
        psi2=rho * (lambda_bar_prime + kappa_prime_over_d) / lambda_bar**2,
        method=PsiMethod.CLOSED_FORM_QUADRATIC,
    )


def _trace_terms(
    theta_eigenvalues: FloatArray,
    dim: int,
    lambda_bar: float,
    lambda_bar_prime: float,
    lambda1: float,
    kappa_prime_over_d: float,
) -> tuple[float, float]:
    a0 = lambda_bar + lambda1**2 * theta_eigenvalues
    d0 = lambda_bar_prime + (kappa_prime_over_d + lambda1**2) * theta_eigenvalues
    return float(np.sum(1.0 / a0) / dim), float(np.sum(d0 / a0**2) / dim)


def _theta_eigenvalues(weights: FloatArray) -> FloatArray:
    """Eigenvalues of WWᵀ through the smaller of WWᵀ and WᵀW."""
    m, d = weights.shape
    if m <= d:
        return np.maximum(np.linalg.eigvalsh(weights @ weights.T), 0.0)
    nonzero = np.maximum(np.linalg.eigvalsh(weights.T @ weights), 0.0)
    return np.concatenate([nonzero, np.zeros(m - d)])


def psi_estimate(
    covariance: CovarianceDescriptor,
    profile: ActivationProfile,
    rho: float,
    n_rep: int = 20,
    seed: int = 0,
    ridge: float = 0.0,
) -> PsiPair:
    """Average trace(A₀⁻¹)/d and trace(A₀⁻²D₀)/d over ``n_rep`` neuron draws.

    Activations with λ₁ = 0 (the quadratic family, any even σ) use the
    closed form ψ₁ = ρ/(λ̄+λ), ψ₂ = ρ(λ̄′ + κ′/d)/(λ̄+λ)², which is (ρ/2, ρ)
    for σ(t) = t² − 1.
    """
    if rho <= 0.0:
        raise InvalidInputError("ρ must be positive", rho=rho)
    if abs(profile.lambda1) <= LINEAR_TERM_TOLERANCE:
        return _closed_form(profile, rho, covariance.frob_sq, ridge)
    if n_rep < 1:
        raise InvalidInputError("n_rep must be at least 1", n_rep=n_rep)

    dim = covariance.dim
    m = max(1, round(rho * dim))
    lambda_bar = _shifted_lambda_bar(profile, ridge)
    lambda_bar_prime = max(profile.deriv_norm_sq - profile.lambda1**2, 0.0)
    kappa_prime_over_d = profile.lambda3**2 * covariance.frob_sq / 2.0

    samples = np.empty((n_rep, 2))
    for rep in range(n_rep):
        ensemble = sample_ensemble(covariance, m, derive_seed(seed, "psi", rep))
        samples[rep] = _trace_terms(
            _theta_eigenvalues(ensemble.weights),
            dim,
            lambda_bar,
            lambda_bar_prime,
            profile.lambda1,
            kappa_prime_over_d,
        )
    means = samples.mean(axis=0)
    ses = samples.std(axis=0, ddof=1) / math.sqrt(n_rep) if n_rep > 1 else np.zeros(2)
    return PsiPair(
        psi1=float(means[0]),
        psi2=float(means[1]),
        method=PsiMethod.FINITE_D_TRACE,
        n_rep=n_rep,
        psi1_se=float(ses[0]),
        psi2_se=float(ses[1]),
    )


def _stieltjes(
    spectrum: FloatArray, rho: float, z: float, tol: float, max_iterations: int
) -> float:
    """s(z) solving s = 1/(−z + E_H[t/(1 + ρts)]) for z < 0, iterated from s = 0."""

    def update(s: FloatArray) -> FloatArray:
        denominator = -z + float(np.mean(spectrum / (1.0 + rho * spectrum * s[0])))
        return np.array([1.0 / denominator])

    iterator = FixedPointIterator(update, max_iterations=max_iterations, tolerance=tol)
    result = iterator.iterate(np.zeros(1))
    if not result.is_converged():
        structured_log(
            logger,
            "error",
            "Silverstein iteration did not converge",
            phase="theory",
            z=z,
            **result.metrics.to_dict(),
        )
        raise IterationLimitError(
            "Silverstein iteration did not converge",
            iterations=result.metrics.iterations,
            last_residual=result.metrics.final_residual,
        )
    return float(result.fixed_point[0])


def psi_silverstein(
    spectrum: FloatArray,
    profile: ActivationProfile,
    rho: float,
    tol: float = 1e-12,
    ridge: float = 0.0,
    max_iterations: int = 10_000,
) -> PsiPair:
    """ψ₁, ψ₂ from the limiting spectral law H of dΓ (given as its eigenvalues).

    With z₀ = −(λ̄+λ)/λ₁² and s the Stieltjes transform of the law of WWᵀ,
    ψ₁ = (ρ/λ₁²)s(z₀) and trace(A₀⁻²)/d = (ρ/λ₁⁴)s′(z₀), the derivative
    taken by a central difference with step 1e-5·|z₀|.
    """
    t = np.asarray(spectrum, dtype=np.float64)
    if t.ndim != 1 or t.size == 0 or np.any(t < 0.0):
        raise InvalidInputError("spectrum must be a nonempty list of nonnegative eigenvalues")
    if tol <= 0.0:
        raise InvalidInputError("tolerance must be positive", tol=tol)
    if rho <= 0.0:
        raise InvalidInputError("ρ must be positive", rho=rho)

    dim = t.size
    gamma_frob_sq = float(np.sum(t**2)) / dim**2
    lambda1 = profile.lambda1
    if abs(lambda1) <= LINEAR_TERM_TOLERANCE:
        return _closed_form(profile, rho, gamma_frob_sq, ridge)

    lambda_bar = _shifted_lambda_bar(profile, ridge)
    lambda_bar_prime = max(profile.deriv_norm_sq - lambda1**2, 0.0)
    coupling = profile.lambda3**2 * gamma_frob_sq / 2.0 + lambda1**2

    z0 = -lambda_bar / lambda1**2
    step = SILVERSTEIN_STEP * abs(z0)
    s0 = _stieltjes(t, rho, z0, tol, max_iterations)
    s_plus = _stieltjes(t, rho, z0 + step, tol, max_iterations)
    s_minus = _stieltjes(t, rho, z0 - step, tol, max_iterations)
    derivative = (s_plus - s_minus) / (2.0 * step)

    psi1 = rho * s0 / lambda1**2
    inverse_sq = rho * derivative / lambda1**4
    psi2 = (lambda_bar_prime - coupling * lambda_bar / lambda1**2) * inverse_sq + coupling * psi1 / lambda1**2
    return PsiPair(psi1=psi1, psi2=psi2, method=PsiMethod.SILVERSTEIN)


@dataclass(frozen=True)
class TheoryInputs:
    """Everything the closed-form predictions read.

    ``psi`` is needed by the RF family; ``trace_p2u`` and ``trace_p2c``
    (already divided by m) by RFL.
    """

    dim: int
    width: int
    frob_sq: float
    beta: float
    alpha: float
    b_eigenvalues: FloatArray
    constants: ScaleConstants
    activation_norm_sq: float
    activation_deriv_norm_sq: float
    target_mean_sq: float = 0.0
    psi: PsiPair | None = None
    ridge: float = 0.0
    trace_p2u: float | None = None
    trace_p2c: float | None = None

    @property
    def rho(self) -> float:
        return self.width / self.dim

    @property
    def rho_floor(self) -> float:
        """ρ̲ = min(ρ, 1)."""
        return min(self.rho, 1.0)

    @classmethod
    def from_setup(
        cls,
        ground_truth: GroundTruth,
        covariance: CovarianceDescriptor,
        profile: ActivationProfile,
        width: int,
        *,
        psi: PsiPair | None = None,
        ridge: float = 0.0,
        trace_p2u: float | None = None,
        trace_p2c: float | None = None,
    ) -> TheoryInputs:
        summary = ground_truth.summary
        return cls(
            dim=ground_truth.dim,
            width=width,
            frob_sq=summary.frob_sq,
            beta=summary.beta,
            alpha=alignment(ground_truth.b_matrix, covariance.gamma),
            b_eigenvalues=summary.eigenvalues,
            constants=scale_constants(profile, ground_truth.b_matrix, covariance.gamma),
            activation_norm_sq=profile.norm_sq,
            activation_deriv_norm_sq=profile.deriv_norm_sq,
            target_mean_sq=ground_truth.mean**2,
            psi=psi,
            ridge=ridge,
            trace_p2u=trace_p2u,
            trace_p2c=trace_p2c,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.dim,
            "m": self.width,
            "rho": self.rho,
            "beta": self.beta,
            "alpha": self.alpha,
            "ridge": self.ridge,
            "constants": self.constants.to_dict(),
            "psi": self.psi.to_dict() if self.psi else None,
        }


@dataclass(frozen=True)
class TheoryPrediction:
    """Predicted (egen, erob) for one regime."""

    regime: Regime
    egen: float
    erob: float
    inputs: TheoryInputs = field(repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {"regime": self.regime.value, "egen": self.egen, "erob": self.erob, **self.inputs.to_dict()}


def _require_psi(inputs: TheoryInputs, regime: Regime) -> PsiPair:
    if inputs.psi is None:
        raise InvalidInputError("ψ pair required", regime=regime.value)
    return inputs.psi


def _predict_sgd(inputs: TheoryInputs) -> tuple[float, float]:
    top = inputs.b_eigenvalues[: min(inputs.width, inputs.b_eigenvalues.size)]
    erob = float(np.sum(top**2)) / inputs.frob_sq
    return 1.0 - erob, erob


def _predict_rf(inputs: TheoryInputs, regime: Regime) -> tuple[float, float]:
    psi = _require_psi(inputs, regime)
    c = inputs.constants
    denominator = 2.0 * c.kappa * psi.psi1 + 2.0
    egen = 1.0 - psi.psi1 * c.tau**2 / (inputs.frob_sq * denominator)
    erob = c.tau**2 * (2.0 * c.kappa * psi.psi1**2 + psi.psi2) / (inputs.frob_sq * denominator**2)
    return egen, erob


def _predict_init(inputs: TheoryInputs) -> tuple[float, float]:
    c = inputs.constants
    gamma_sq = c.gamma_frob_sq
    erob = (
        inputs.activation_deriv_norm_sq + c.lambda3**2 * gamma_sq / 2.0 + c.lambda2**2 * gamma_sq
    ) / (4.0 * inputs.frob_sq)
    egen = 1.0 + (
        inputs.activation_norm_sq + c.lambda2**2 * gamma_sq / 2.0 + inputs.target_mean_sq
    ) / (2.0 * inputs.frob_sq)
    return egen, erob


def nt_projection_moments(rho: float, beta: float) -> tuple[float, float]:
    """Limits of E‖P₁P₁ᵀB‖²/‖B‖² and E‖P₁ᵀBP₁‖²/‖B‖².

    >>> nt_projection_moments(0.5, 1.0)
    (0.5, 0.5)
    """
    if rho < 0.0 or not 0.0 <= beta <= 1.0:
        raise InvalidInputError("need ρ ≥ 0 and β ∈ [0, 1]", rho=rho, beta=beta)
    floor = min(rho, 1.0)
    return floor, floor**2 * (1.0 - beta) + floor * beta


def _predict_nt(inputs: TheoryInputs) -> tuple[float, float]:
    gap = max(1.0 - inputs.rho, 0.0)
    beta = inputs.beta
    floor = inputs.rho_floor
    egen = gap**2 * (1.0 - beta) + gap * beta
    erob = (floor + floor**2) / 2.0 + (floor - floor**2) * beta / 2.0
    return egen, erob


def predict(regime: Regime, inputs: TheoryInputs) -> TheoryPrediction:
    """Closed-form (egen, erob) for ``regime``."""
    if regime is Regime.SGD_LIMIT:
        egen, erob = _predict_sgd(inputs)
    elif regime in (Regime.RF, Regime.RF_RIDGE):
        egen, erob = _predict_rf(inputs, regime)
    elif regime is Regime.RFL:
        egen, erob = _predict_rf(inputs, regime)
        if inputs.trace_p2u is None or inputs.trace_p2c is None:
            raise InvalidInputError("RFL prediction needs trace(P²U)/m and trace(P²C)/m")
        egen += inputs.trace_p2u / (2.0 * inputs.frob_sq)
        erob += inputs.trace_p2c / (4.0 * inputs.frob_sq)
    elif regime is Regime.INIT:
        egen, erob = _predict_init(inputs)
    elif regime is Regime.NT:
        egen, erob = _predict_nt(inputs)
    elif regime is Regime.NTL:
        egen, erob = _predict_nt(inputs)
        erob += _predict_init(inputs)[1]
    else:  # pragma: no cover
        raise NotApplicableError("no prediction", regime=regime.value)
    return TheoryPrediction(regime=regime, egen=egen, erob=erob, inputs=inputs)


def predict_rf_asymptote(alpha: float) -> tuple[float, float]:
    """ρ → ∞ limits of RF: (egen, erob) → (1 − α², α²)."""
    if not -1.0 <= alpha <= 1.0:
        raise InvalidInputError("alignment must lie in [−1, 1]", alpha=alpha)
    return 1.0 - alpha**2, alpha**2


class HasErrors(Protocol):
    @property
    def egen(self) -> float: ...

    @property
    def erob(self) -> float: ...


def tradeoff_residual(regime: Regime, result: HasErrors, beta: float | None = None) -> float:
    """egen + erob − 1 for the regimes with a sum-to-one identity.

    Applies to SGD_LIMIT, unregularized RF and NT on a flat target (β = 1).
    For a :class:`TheoryPrediction` the ridge and β are read from its inputs.
    """
    ridge = getattr(result, "ridge", None)
    if isinstance(result, TheoryPrediction):
        ridge = result.inputs.ridge
        beta = result.inputs.beta if beta is None else beta
    if regime is Regime.SGD_LIMIT:
        pass
    elif regime is Regime.RF:
        if ridge:
            raise NotApplicableError("RF trade-off identity needs λ = 0", ridge=ridge)
    elif regime is Regime.NT:
        if beta is not None and abs(beta - 1.0) > 1e-12:
            raise NotApplicableError("NT trade-off identity needs β = 1", beta=beta)
    else:
        raise NotApplicableError("no trade-off identity", regime=regime.value)
    return result.egen + result.erob - 1.0


def rf_quadratic_tradeoff_symbolic() -> Any:
    """egen + erob − 1 for RF with the quadratic ψ closed forms, simplified.

    Substituting ψ₂ = 2ψ₁ makes the RF generalization and robustness formulas
    complementary; the returned SymPy expression is identically 0.
    """
    psi1, tau, kappa, frob = sp.symbols("psi1 tau kappa frob", positive=True)
    psi2 = 2 * psi1
    denominator = 2 * kappa * psi1 + 2
    egen = 1 - psi1 * tau**2 / (frob * denominator)
    erob = tau**2 * (2 * kappa * psi1**2 + psi2) / (frob * denominator**2)
    return sp.simplify(egen + erob - 1)


@dataclass(frozen=True)
class TrainingVsInit:
    """Robustness of the fully trained network against the random initialization."""

    erob_trained: float
    erob_init: float

    @property
    def training_degrades(self) -> bool:
        """Training makes the network less robust than at initialization."""
        return self.erob_trained > self.erob_init


def compare_training_to_init(
    ground_truth: GroundTruth,
    covariance: CovarianceDescriptor,
    width: int,
    profile: ActivationProfile | None = None,
) -> TrainingVsInit:
    """SGD-limit robustness ‖B‖²_{F,m}/‖B‖² against the init prediction.

    For σ(t) = t² − 1 training degrades robustness iff ‖B‖²_{F,m} > 1 + ‖Γ‖_F².
    """
    activation = profile or get_activation("quadratic")
    inputs = TheoryInputs.from_setup(ground_truth, covariance, activation, width)
    return TrainingVsInit(
        erob_trained=predict(Regime.SGD_LIMIT, inputs).erob,
        erob_init=predict(Regime.INIT, inputs).erob,
    )
