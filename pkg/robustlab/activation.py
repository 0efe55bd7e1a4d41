"""Hermite analysis of activation functions.

Coefficients use the unnormalized probabilist's Hermite polynomials
He₀ = 1, He₁ = t, He₂ = t² − 1, He₃ = t³ − 3t, so E[He_k(G)²] = k! and

    λ_k(σ) = E[σ(G) He_k(G)],      ‖σ‖² = Σ_k λ_k² / k!.

With this convention σ(t) = t² − 1 has λ₂ = 2 and ‖σ‖² = 2. Only λ₀..λ₃ are
computed.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Any

import numpy as np

from robustlab.engine.norms import frobenius_sq
from robustlab.engine.quadrature import DEFAULT_NODES, ScalarFn, gaussian_expectation
from robustlab.exceptions import InvalidInputError
from robustlab.types import FloatArray

HERMITE_ORDER = 3
DERIVATIVE_CHECK_TOLERANCE = 1e-6


def _he0(t: FloatArray) -> FloatArray:
    return np.ones_like(t)


def _he1(t: FloatArray) -> FloatArray:
    return t


def _he2(t: FloatArray) -> FloatArray:
    out: FloatArray = t**2 - 1.0
    return out


def _he3(t: FloatArray) -> FloatArray:
    out: FloatArray = t**3 - 3.0 * t
    return out


HERMITE_POLYNOMIALS: tuple[ScalarFn, ...] = (_he0, _he1, _he2, _he3)


def hermite_coefficient(
    fn: ScalarFn,
    k: int,
    nodes: int = DEFAULT_NODES,
    breakpoints: tuple[float, ...] = (),
) -> float:
    """λ_k = E[fn(G) He_k(G)] for k ∈ {0, 1, 2, 3}.

    >>> round(hermite_coefficient(lambda t: t**2 - 1, 2), 12)
    2.0
    """
    if k not in range(HERMITE_ORDER + 1):
        raise InvalidInputError("Hermite index out of range", k=k, allowed="0..3")
    polynomial = HERMITE_POLYNOMIALS[k]

    def integrand(t: FloatArray) -> FloatArray:
        out: FloatArray = fn(t) * polynomial(t)
        return out

    return gaussian_expectation(integrand, nodes, breakpoints)


def l2_norms(
    fn: ScalarFn,
    deriv: ScalarFn,
    nodes: int = DEFAULT_NODES,
    breakpoints: tuple[float, ...] = (),
) -> tuple[float, float]:
    """(‖σ‖², ‖σ′‖²) in L²(N(0, 1))."""

    def squared(f: ScalarFn) -> ScalarFn:
        def inner(t: FloatArray) -> FloatArray:
            out: FloatArray = f(t) ** 2
            return out

        return inner

    return (
        gaussian_expectation(squared(fn), nodes, breakpoints),
        gaussian_expectation(squared(deriv), nodes, breakpoints),
    )


@dataclass(frozen=True)
class ActivationProfile:
    """Activation σ with its Hermite statistics.

    ``quadratic_shift`` is set for the exactly solvable family σ(t) = t² + s;
    population matrices then use closed forms.
    """

    name: str
    eval: ScalarFn
    deriv: ScalarFn
    hermite: tuple[float, float, float, float]
    norm_sq: float
    deriv_norm_sq: float
    deriv_lambda1: float
    breakpoints: tuple[float, ...] = ()
    quadratic_shift: float | None = None
    satisfies_growth: bool = True

    @classmethod
    def from_functions(
        cls,
        name: str,
        eval: ScalarFn,
        deriv: ScalarFn,
        *,
        breakpoints: tuple[float, ...] = (),
        quadratic_shift: float | None = None,
        satisfies_growth: bool = True,
        nodes: int = DEFAULT_NODES,
    ) -> ActivationProfile:
        """Build a profile by quadrature."""
        coefficients = tuple(
            hermite_coefficient(eval, k, nodes, breakpoints) for k in range(HERMITE_ORDER + 1)
        )
        norm_sq, deriv_norm_sq = l2_norms(eval, deriv, nodes, breakpoints)
        return cls(
            name=name,
            eval=eval,
            deriv=deriv,
            hermite=(coefficients[0], coefficients[1], coefficients[2], coefficients[3]),
            norm_sq=norm_sq,
            deriv_norm_sq=deriv_norm_sq,
            deriv_lambda1=hermite_coefficient(deriv, 1, nodes, breakpoints),
            breakpoints=breakpoints,
            quadratic_shift=quadratic_shift,
            satisfies_growth=satisfies_growth,
        )

    @property
    def lambda0(self) -> float:
        return self.hermite[0]

    @property
    def lambda1(self) -> float:
        return self.hermite[1]

    @property
    def lambda2(self) -> float:
        return self.hermite[2]

    @property
    def lambda3(self) -> float:
        return self.hermite[3]

    @property
    def centered(self) -> bool:
        """λ₀ = 0."""
        return abs(self.lambda0) <= 1e-10

    @property
    def has_second_order(self) -> bool:
        """λ₂ ≠ 0."""
        return abs(self.lambda2) > 1e-10

    @property
    def is_affine(self) -> bool:
        """σ(t) = a + bt, i.e. no energy beyond the first two Hermite terms."""
        return self.norm_sq - self.lambda0**2 - self.lambda1**2 <= 1e-10 * max(1.0, self.norm_sq)

    @property
    def is_quadratic(self) -> bool:
        return self.quadratic_shift is not None

    @property
    def derivative_consistent(self) -> bool:
        """λ₁(σ′) equals λ₂(σ) within 1e-6 (Gaussian integration by parts)."""
        return abs(self.deriv_lambda1 - self.lambda2) <= DERIVATIVE_CHECK_TOLERANCE

    def parseval_partial(self, order: int = HERMITE_ORDER) -> float:
        """Σ_{k ≤ order} λ_k²/k!, never above ‖σ‖²."""
        order = min(order, HERMITE_ORDER)
        return sum(self.hermite[k] ** 2 / math.factorial(k) for k in range(order + 1))

    def __call__(self, t: FloatArray) -> FloatArray:
        return self.eval(t)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "hermite": list(self.hermite),
            "norm_sq": self.norm_sq,
            "deriv_norm_sq": self.deriv_norm_sq,
            "centered": self.centered,
            "has_second_order": self.has_second_order,
            "derivative_consistent": self.derivative_consistent,
        }


@dataclass(frozen=True)
class ScaleConstants:
    """Scale constants of the random-features theory.

    λ̄ = ‖σ‖² − λ₁², κ = λ₂²‖Γ‖_F²d/2, τ = λ₂·trace(BΓ)·√d,
    λ̄′ = ‖σ′‖² − λ₁², κ′ = λ₃²‖Γ‖_F²d/2. The Hermite coefficients and ‖Γ‖_F²
    they were built from ride along for the formulas that need them.
    """

    lambda_bar: float
    kappa: float
    tau: float
    lambda_bar_prime: float
    kappa_prime: float
    lambda1: float
    lambda2: float
    lambda3: float
    gamma_frob_sq: float
    dim: int

    def to_dict(self) -> dict[str, float]:
        return {
            "lambda_bar": self.lambda_bar,
            "kappa": self.kappa,
            "tau": self.tau,
            "lambda_bar_prime": self.lambda_bar_prime,
            "kappa_prime": self.kappa_prime,
        }


def scale_constants(
    profile: ActivationProfile,
    b_matrix: FloatArray,
    gamma: FloatArray,
    dim: int | None = None,
) -> ScaleConstants:
    """Evaluate λ̄, κ, τ, λ̄′, κ′ for (σ, B, Γ)."""
    b = np.asarray(b_matrix, dtype=np.float64)
    g = np.asarray(gamma, dtype=np.float64)
    if b.shape != g.shape:
        raise InvalidInputError("dimension mismatch", b=b.shape, gamma=g.shape)
    d = dim if dim is not None else b.shape[0]
    gamma_frob_sq = frobenius_sq(g)
    lam1, lam2, lam3 = profile.lambda1, profile.lambda2, profile.lambda3
    # Round-off can push a zero difference slightly negative.
    return ScaleConstants(
        lambda_bar=max(profile.norm_sq - lam1**2, 0.0),
        kappa=lam2**2 * gamma_frob_sq * d / 2.0,
        tau=lam2 * float(np.sum(b * g)) * math.sqrt(d),
        lambda_bar_prime=max(profile.deriv_norm_sq - lam1**2, 0.0),
        kappa_prime=lam3**2 * gamma_frob_sq * d / 2.0,
        lambda1=lam1,
        lambda2=lam2,
        lambda3=lam3,
        gamma_frob_sq=gamma_frob_sq,
        dim=d,
    )


# Built-in activations. Module-level functions keep profiles picklable.


def _shifted_square(t: FloatArray, shift: float) -> FloatArray:
    out: FloatArray = t**2 + shift
    return out


def _double(t: FloatArray) -> FloatArray:
    out: FloatArray = 2.0 * t
    return out


def _relu(t: FloatArray) -> FloatArray:
    return np.maximum(t, 0.0)


def _step(t: FloatArray) -> FloatArray:
    return (t > 0.0).astype(np.float64)


def _tanh_deriv(t: FloatArray) -> FloatArray:
    out: FloatArray = 1.0 - np.tanh(t) ** 2
    return out


def _identity(t: FloatArray) -> FloatArray:
    return np.asarray(t, dtype=np.float64)


def _ones(t: FloatArray) -> FloatArray:
    return np.ones_like(t, dtype=np.float64)


def quadratic_activation(shift: float = -1.0, nodes: int = DEFAULT_NODES) -> ActivationProfile:
    """σ(t) = t² + shift; shift −1 is the centered quadratic."""
    name = "quadratic" if shift == -1.0 else f"shifted_quadratic({shift:g})"
    return ActivationProfile.from_functions(
        name,
        partial(_shifted_square, shift=shift),
        _double,
        quadratic_shift=shift,
        nodes=nodes,
    )


BUILTIN_ACTIVATIONS: dict[str, Callable[..., ActivationProfile]] = {
    "quadratic": lambda nodes=DEFAULT_NODES, **_: quadratic_activation(-1.0, nodes),
    "shifted_quadratic": lambda nodes=DEFAULT_NODES, shift=0.0, **_: quadratic_activation(
        float(shift), nodes
    ),
    "relu": lambda nodes=DEFAULT_NODES, **_: ActivationProfile.from_functions(
        "relu", _relu, _step, breakpoints=(0.0,), nodes=nodes
    ),
    "tanh": lambda nodes=DEFAULT_NODES, **_: ActivationProfile.from_functions(
        "tanh", np.tanh, _tanh_deriv, nodes=nodes
    ),
    "identity": lambda nodes=DEFAULT_NODES, **_: ActivationProfile.from_functions(
        "identity", _identity, _ones, nodes=nodes
    ),
}


@lru_cache(maxsize=32)
def get_activation(name: str, shift: float | None = None, nodes: int = DEFAULT_NODES) -> ActivationProfile:
    """Built-in activation by config name.

    Valid names: quadratic, shifted_quadratic, relu, tanh, identity.
    """
    key = name.strip().lower()
    if key not in BUILTIN_ACTIVATIONS:
        valid = ", ".join(sorted(BUILTIN_ACTIVATIONS))
        raise InvalidInputError(f"Unknown activation '{name}'. Valid options: {valid}")
    params: dict[str, Any] = {"nodes": nodes}
    if shift is not None:
        params["shift"] = shift
    return BUILTIN_ACTIVATIONS[key](**params)
