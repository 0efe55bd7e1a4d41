"""Ground truth, covariance descriptors and neuron ensembles.

The learning problem is the quadratic target f⋆(x) = xᵀBx + b₀ on x ~ N(0, I_d)
with B symmetric PSD. Hidden neurons w_j are drawn iid from N(0, Γ) with
trace(Γ) = 1. Every object here is immutable after construction (arrays are
marked read-only) and safe to share between worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np

from robustlab.engine.norms import frobenius_sq, symmetric_op_norm
from robustlab.engine.spectral import (
    alignment,
    check_psd,
    effective_rank,
    psd_sqrt,
)
from robustlab.exceptions import InvalidInputError, NotPositiveSemidefiniteError
from robustlab.types import FloatArray
from robustlab.utils.rng import make_rng

TRACE_TOLERANCE = 1e-8


def _frozen(array: FloatArray) -> FloatArray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def haar_rotation(dim: int, seed: int) -> FloatArray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix)."""
    rng = make_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q *= np.sign(np.diag(r))
    return q


def _from_eigenvalues(eigenvalues: FloatArray, rotation_seed: int | None) -> FloatArray:
    if rotation_seed is None:
        return np.diag(eigenvalues)
    q = haar_rotation(eigenvalues.size, rotation_seed)
    matrix = (q * eigenvalues) @ q.T
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True)
class SpectralSummary:
    """Derived spectral quantities of B."""

    eigenvalues: FloatArray  # descending

    @property
    def frob_sq(self) -> float:
        """‖B‖_F²."""
        return float(np.sum(self.eigenvalues**2))

    def frob_trunc_sq(self, m: int) -> float:
        """‖B‖_{F,m}²."""
        if m < 1:
            raise InvalidInputError("truncation width must be at least 1", m=m)
        return float(np.sum(self.eigenvalues[: min(m, self.eigenvalues.size)] ** 2))

    @property
    def beta(self) -> float:
        """β = trace(B)²/(d‖B‖_F²)."""
        frob_sq = self.frob_sq
        if frob_sq == 0.0:
            raise InvalidInputError("β is undefined for B = 0")
        return float(np.sum(self.eigenvalues) ** 2 / (self.eigenvalues.size * frob_sq))

    @property
    def rank(self) -> int:
        top = float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0
        return int(np.sum(self.eigenvalues > 1e-10 * max(top, 1e-300)))

    @property
    def effective_rank(self) -> float:
        """Participation ratio of the spectrum."""
        return effective_rank(self.eigenvalues)


@dataclass(frozen=True)
class GroundTruth:
    """Quadratic target f⋆(x) = xᵀBx + b₀."""

    dim: int
    b_matrix: FloatArray
    offset: float

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvalidInputError("dimension must be positive", dim=self.dim)
        b = np.asarray(self.b_matrix, dtype=np.float64)
        if b.shape != (self.dim, self.dim):
            raise InvalidInputError("B has wrong shape", shape=b.shape, dim=self.dim)
        check_psd(b, "B")
        object.__setattr__(self, "b_matrix", _frozen(b))

    @classmethod
    def centered(cls, b_matrix: FloatArray) -> GroundTruth:
        """Target with b₀ = −trace(B), so E f⋆ = 0."""
        b = np.asarray(b_matrix, dtype=np.float64)
        return cls(dim=b.shape[0], b_matrix=b, offset=-float(np.trace(b)))

    @cached_property
    def summary(self) -> SpectralSummary:
        eigenvalues = check_psd(self.b_matrix, "B")
        return SpectralSummary(eigenvalues=_frozen(np.maximum(eigenvalues, 0.0)))

    @property
    def frob_sq(self) -> float:
        """‖B‖_F²."""
        return frobenius_sq(self.b_matrix)

    @property
    def trace(self) -> float:
        return float(np.trace(self.b_matrix))

    @property
    def mean(self) -> float:
        """E f⋆(x) = trace(B) + b₀."""
        return self.trace + self.offset

    @property
    def norm_sq(self) -> float:
        """‖f⋆‖² = E f⋆(x)² = 2‖B‖_F² + (trace(B) + b₀)²."""
        return 2.0 * self.frob_sq + self.mean**2

    @property
    def dirichlet_sq(self) -> float:
        """𝔖(f⋆)² = E‖2Bx‖² = 4‖B‖_F²."""
        return 4.0 * self.frob_sq

    @property
    def is_centered(self) -> bool:
        return abs(self.mean) <= 1e-12 * max(1.0, abs(self.trace))

    def value(self, x: FloatArray) -> FloatArray:
        """f⋆ on a batch of rows."""
        batch = np.atleast_2d(x)
        out: FloatArray = np.einsum("ni,ij,nj->n", batch, self.b_matrix, batch) + self.offset
        return out

    def gradient(self, x: FloatArray) -> FloatArray:
        """∇f⋆(x) = 2Bx on a batch of rows."""
        out: FloatArray = 2.0 * np.atleast_2d(x) @ self.b_matrix
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "offset": self.offset,
            "frob_sq": self.frob_sq,
            "beta": self.summary.beta,
            "rank": self.summary.rank,
        }


class SpectrumKind(str, Enum):
    """Named eigenvalue profiles."""

    IDENTITY = "identity"
    RANK_FLAT = "rank_flat"
    POWER_LAW = "power_law"
    CUSTOM = "custom"


class Normalization(str, Enum):
    """Optional rescaling applied after the profile shape."""

    NONE = "none"
    FROBENIUS = "frobenius"  # ‖·‖_F = scale
    TRACE = "trace"  # trace = scale


@dataclass(frozen=True)
class SpectrumProfile:
    """Eigenvalue profile of a d×d PSD matrix.

    Examples:
        identity with ``normalization=frobenius`` gives I/√d;
        identity with ``normalization=trace`` gives I/d;
        ``rank_flat`` with ``rank_fraction=0.5`` gives a flat rank-d/2 spectrum.
    """

    kind: SpectrumKind = SpectrumKind.IDENTITY
    scale: float = 1.0
    rank: int | None = None
    rank_fraction: float | None = None
    exponent: float = 1.0
    values: tuple[float, ...] = ()
    normalization: Normalization = Normalization.NONE
    rotation_seed: int | None = None

    def resolved_rank(self, dim: int) -> int:
        if self.rank is not None:
            return max(0, min(self.rank, dim))
        if self.rank_fraction is not None:
            return max(1, min(dim, int(round(self.rank_fraction * dim))))
        return dim

    def eigenvalues(self, dim: int) -> FloatArray:
        """Profile eigenvalues in descending order."""
        if dim < 1:
            raise InvalidInputError("dimension must be positive", dim=dim)

        if self.kind is SpectrumKind.IDENTITY:
            values = np.ones(dim)
        elif self.kind is SpectrumKind.RANK_FLAT:
            values = np.zeros(dim)
            values[: self.resolved_rank(dim)] = 1.0
        elif self.kind is SpectrumKind.POWER_LAW:
            values = np.arange(1, dim + 1, dtype=np.float64) ** (-self.exponent)
        else:
            if len(self.values) != dim:
                raise InvalidInputError(
                    "custom spectrum length must equal the dimension",
                    length=len(self.values),
                    dim=dim,
                )
            values = np.asarray(self.values, dtype=np.float64)

        if np.any(values < 0.0) or self.scale < 0.0:
            raise NotPositiveSemidefiniteError(
                "profile eigenvalues must be nonnegative", min_value=float(np.min(values))
            )

        if self.normalization is Normalization.FROBENIUS:
            norm = float(np.linalg.norm(values))
            values = values / norm if norm > 0 else values
        elif self.normalization is Normalization.TRACE:
            total = float(np.sum(values))
            values = values / total if total > 0 else values

        return np.sort(self.scale * values)[::-1].copy()

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind.value, "scale": self.scale}
        if self.rank is not None:
            data["rank"] = self.rank
        if self.rank_fraction is not None:
            data["rank_fraction"] = self.rank_fraction
        if self.kind is SpectrumKind.POWER_LAW:
            data["exponent"] = self.exponent
        if self.values:
            data["values"] = list(self.values)
        if self.normalization is not Normalization.NONE:
            data["normalization"] = self.normalization.value
        if self.rotation_seed is not None:
            data["rotation_seed"] = self.rotation_seed
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SpectrumProfile:
        return cls(
            kind=SpectrumKind(data.get("kind", "identity")),
            scale=float(data.get("scale", 1.0)),
            rank=data.get("rank"),
            rank_fraction=data.get("rank_fraction"),
            exponent=float(data.get("exponent", 1.0)),
            values=tuple(float(v) for v in data.get("values", ())),
            normalization=Normalization(data.get("normalization", "none")),
            rotation_seed=data.get("rotation_seed"),
        )


def make_ground_truth(profile: SpectrumProfile, dim: int) -> GroundTruth:
    """Centered ground truth whose B has the profile's eigenvalues.

    >>> gt = make_ground_truth(SpectrumProfile(normalization=Normalization.FROBENIUS), 4)
    >>> float(gt.b_matrix[0, 0]), gt.offset
    (0.5, -2.0)
    """
    eigenvalues = profile.eigenvalues(dim)
    return GroundTruth.centered(_from_eigenvalues(eigenvalues, profile.rotation_seed))


@dataclass(frozen=True)
class CovarianceDescriptor:
    """Neuron covariance Γ with trace(Γ) = 1."""

    dim: int
    gamma: FloatArray
    spectrum: FloatArray | None = None  # eigenvalues of d·Γ, when known

    def __post_init__(self) -> None:
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.shape != (self.dim, self.dim):
            raise InvalidInputError("Γ has wrong shape", shape=g.shape, dim=self.dim)
        check_psd(g, "Γ")
        trace = float(np.trace(g))
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise InvalidInputError("trace(Γ) must equal 1", trace=trace)
        object.__setattr__(self, "gamma", _frozen(g))
        if self.spectrum is not None:
            object.__setattr__(self, "spectrum", _frozen(np.asarray(self.spectrum)))

    @classmethod
    def isotropic(cls, dim: int) -> CovarianceDescriptor:
        """Γ = I/d."""
        return cls(dim=dim, gamma=np.eye(dim) / dim, spectrum=np.ones(dim))

    @classmethod
    def proportional_to(cls, b_matrix: FloatArray) -> CovarianceDescriptor:
        """Γ = B/trace(B), perfectly aligned with the target."""
        b = np.asarray(b_matrix, dtype=np.float64)
        trace = float(np.trace(b))
        if trace <= 0.0:
            raise InvalidInputError("Γ ∝ B needs trace(B) > 0", trace=trace)
        return cls(dim=b.shape[0], gamma=b / trace)

    @classmethod
    def from_profile(cls, profile: SpectrumProfile, dim: int) -> CovarianceDescriptor:
        """Γ with the profile's eigenvalue shape, rescaled to unit trace."""
        eigenvalues = profile.eigenvalues(dim)
        total = float(np.sum(eigenvalues))
        if total <= 0.0:
            raise InvalidInputError("covariance profile has zero trace")
        eigenvalues = eigenvalues / total
        return cls(
            dim=dim,
            gamma=_from_eigenvalues(eigenvalues, profile.rotation_seed),
            spectrum=dim * eigenvalues,
        )

    @cached_property
    def sqrt(self) -> FloatArray:
        """Γ^{1/2} by symmetric eigendecomposition."""
        return _frozen(psd_sqrt(self.gamma))

    @property
    def frob_sq(self) -> float:
        """‖Γ‖_F²."""
        return frobenius_sq(self.gamma)

    @property
    def scaled_op_norm(self) -> float:
        """d‖Γ‖_op."""
        return self.dim * symmetric_op_norm(self.gamma)

    def scaled_spectrum(self) -> FloatArray:
        """Eigenvalues of d·Γ, descending."""
        if self.spectrum is not None:
            return np.sort(np.asarray(self.spectrum))[::-1].copy()
        return self.dim * np.maximum(check_psd(self.gamma, "Γ"), 0.0)

    def check_bounded(self, constant: float) -> float:
        """Assert d‖Γ‖_op ≤ constant; returns the recorded value."""
        value = self.scaled_op_norm
        if value > constant:
            raise InvalidInputError("d‖Γ‖_op exceeds bound", value=value, bound=constant)
        return value


@dataclass(frozen=True)
class NeuronEnsemble:
    """Hidden-layer weights W (m×d, rows w_j ~ N(0, Γ)) for one trial."""

    weights: FloatArray
    covariance: CovarianceDescriptor
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def width(self) -> int:
        """m."""
        return int(self.weights.shape[0])

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def rho(self) -> float:
        """ρ = m/d."""
        return self.width / self.dim

    @cached_property
    def theta(self) -> FloatArray:
        """Θ = WWᵀ."""
        return _frozen(self.weights @ self.weights.T)

    @property
    def sq_norms(self) -> FloatArray:
        """‖w_j‖²."""
        return np.einsum("ij,ij->i", self.weights, self.weights)

    def alignment(self, ground_truth: GroundTruth) -> float:
        """α of the ensemble's covariance against B."""
        return alignment(ground_truth.b_matrix, self.covariance.gamma)


def sample_ensemble(covariance: CovarianceDescriptor, m: int, seed: int) -> NeuronEnsemble:
    """Draw W with iid rows N(0, Γ) as Z·Γ^{1/2}, Z standard normal.

    Deterministic given (Γ, m, seed); rows lie in range(Γ).
    """
    if m < 1:
        raise InvalidInputError("width must be at least 1", m=m)
    rng = make_rng(seed)
    z = rng.standard_normal((m, covariance.dim))
    return NeuronEnsemble(weights=z @ covariance.sqrt, covariance=covariance, seed=seed)

