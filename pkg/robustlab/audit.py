"""Robustness audit: Dirichlet energy, adversarial increments, universal perturbations.

For a differentiable predictor f on x ~ N(0, I_d):

- 𝔖_q(f) = (E‖∇f(x)‖^q)^{1/q}; q = 2 gives the Dirichlet energy 𝔖(f)²,
- Δ_f(x; δ) = sup_{‖v‖≤δ} |f(x + v) − f(x)| with Δ_f(x; δ)/δ → ‖∇f(x)‖,
- J(f) = E[∇f ∇fᵀ], whose top eigenvector is the best universal perturbation.

Quadratic predictors f(x) = xᵀMx + c get exact increments from the
trust-region solver; anything else falls back to projected gradient ascent,
which yields a certified lower bound.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import jsonlines
import numpy as np

from robustlab.activation import ActivationProfile
from robustlab.engine.operators import GramOperator, power_iteration
from robustlab.engine.trust_region import solve_trust_region
from robustlab.exceptions import InvalidInputError, NumericalFailureError
from robustlab.model import GroundTruth
from robustlab.types import FloatArray
from robustlab.utils.logging import get_logger, structured_log
from robustlab.utils.rng import batch_rng, derive_seed, make_rng

logger = get_logger(__name__)

BatchFn = Callable[[FloatArray], FloatArray]

DEFAULT_BATCH = 8192
GRADIENT_CHECK_RTOL = 1e-4


@dataclass(frozen=True)
class QuadraticForm:
    """f(x) = xᵀMx + c with symmetric M."""

    matrix: FloatArray
    offset: float = 0.0

    @cached_property
    def spectrum(self) -> tuple[FloatArray, FloatArray]:
        """Eigenpairs of M."""
        eigenvalues, eigenvectors = np.linalg.eigh(self.matrix)
        return eigenvalues, eigenvectors


@dataclass(frozen=True)
class Predictor:
    """A differentiable function evaluated on batches of rows."""

    value_fn: BatchFn
    gradient_fn: BatchFn
    dim: int
    quadratic_form: QuadraticForm | None = None
    name: str = "predictor"

    def value(self, x: FloatArray) -> FloatArray:
        """f on an (n, d) batch or a single (d,) point; always returns shape (n,)."""
        return self.value_fn(np.atleast_2d(x))

    def gradient(self, x: FloatArray) -> FloatArray:
        """∇f on an (n, d) batch or a single point; returns shape (n, d)."""
        return self.gradient_fn(np.atleast_2d(x))

    @classmethod
    def quadratic(cls, matrix: FloatArray, offset: float = 0.0, name: str = "quadratic") -> Predictor:
        """f(x) = xᵀMx + c (M is symmetrized)."""
        m = np.asarray(matrix, dtype=np.float64)
        m = 0.5 * (m + m.T)
        form = QuadraticForm(matrix=m, offset=float(offset))

        def value(x: FloatArray) -> FloatArray:
            out: FloatArray = np.einsum("ni,ij,nj->n", x, m, x) + form.offset
            return out

        def gradient(x: FloatArray) -> FloatArray:
            out: FloatArray = 2.0 * x @ m
            return out

        return cls(value, gradient, m.shape[0], form, name)

    @classmethod
    def linear(cls, vector: FloatArray, offset: float = 0.0, name: str = "linear") -> Predictor:
        """f(x) = vᵀx + c."""
        v = np.asarray(vector, dtype=np.float64)

        def value(x: FloatArray) -> FloatArray:
            out: FloatArray = x @ v + offset
            return out

        def gradient(x: FloatArray) -> FloatArray:
            return np.broadcast_to(v, x.shape).copy()

        return cls(value, gradient, v.size, None, name)

    @classmethod
    def constant(cls, level: float, dim: int, name: str = "constant") -> Predictor:
        """f(x) = c."""
        return cls.quadratic(np.zeros((dim, dim)), level, name)

    @classmethod
    def from_ground_truth(cls, ground_truth: GroundTruth) -> Predictor:
        """f⋆(x) = xᵀBx + b₀."""
        return cls.quadratic(ground_truth.b_matrix, ground_truth.offset, "ground_truth")

    @classmethod
    def network(
        cls,
        weights: FloatArray,
        output: FloatArray,
        activation: ActivationProfile,
        offset: float = 0.0,
        name: str = "network",
    ) -> Predictor:
        """f(x) = Σ_j z_j σ(xᵀw_j) + c."""
        w = np.asarray(weights, dtype=np.float64)
        z = np.asarray(output, dtype=np.float64)

        def value(x: FloatArray) -> FloatArray:
            out: FloatArray = activation.eval(x @ w.T) @ z + offset
            return out

        def gradient(x: FloatArray) -> FloatArray:
            out: FloatArray = (activation.deriv(x @ w.T) * z) @ w
            return out

        return cls(value, gradient, w.shape[1], None, name)


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean with its standard error."""

    mean: float
    se: float
    n_samples: int

    def z_score(self, target: float) -> float:
        """|mean − target| in units of SE (0 when both coincide exactly)."""
        gap = abs(self.mean - target)
        if gap == 0.0:
            return 0.0
        return gap / self.se if self.se > 0.0 else math.inf

    def within(self, target: float, n_se: float = 5.0) -> bool:
        return self.z_score(target) <= n_se

    def to_dict(self) -> dict[str, float]:
        return {"mean": self.mean, "se": self.se, "n_samples": self.n_samples}


def mc_mean(
    statistic: Callable[[FloatArray], FloatArray],
    dim: int,
    n_samples: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH,
) -> MonteCarloEstimate:
    """E[statistic(x)], x ~ N(0, I_d), over fixed seeded batches."""
    if n_samples < 2:
        raise InvalidInputError("Monte-Carlo needs at least two samples", n_samples=n_samples)
    total = 0.0
    total_sq = 0.0
    n_batches = -(-n_samples // batch_size)
    for index in range(n_batches):
        size = min(batch_size, n_samples - index * batch_size)
        x = batch_rng(seed, index).standard_normal((size, dim))
        values = statistic(x)
        total += float(np.sum(values))
        total_sq += float(np.sum(values**2))
    mean = total / n_samples
    variance = max(total_sq / n_samples - mean**2, 0.0) * n_samples / (n_samples - 1)
    if not (math.isfinite(mean) and math.isfinite(variance)):
        raise NumericalFailureError("non-finite Monte-Carlo estimate")
    return MonteCarloEstimate(mean=mean, se=math.sqrt(variance / n_samples), n_samples=n_samples)


def dirichlet_energy(
    predictor: Predictor,
    n_samples: int,
    seed: int,
    q: int = 2,
    batch_size: int = DEFAULT_BATCH,
) -> MonteCarloEstimate:
    """MC estimate of E‖∇f(x)‖^q; q = 2 is 𝔖(f)², q = 1 is 𝔖₁(f)."""
    if q not in (1, 2):
        raise InvalidInputError("q must be 1 or 2", q=q)

    def statistic(x: FloatArray) -> FloatArray:
        sq = np.sum(predictor.gradient(x) ** 2, axis=1)
        out: FloatArray = sq if q == 2 else np.sqrt(sq)
        return out

    return mc_mean(statistic, predictor.dim, n_samples, seed, batch_size)


@dataclass(frozen=True)
class IncrementResult:
    """Δ_f(x; δ) with the maximizing perturbation."""

    value: float
    direction: FloatArray
    exact: bool

    @property
    def lower_bound(self) -> bool:
        """Generic ascent only certifies Δ from below."""
        return not self.exact


def _exact_increment(form: QuadraticForm, x: FloatArray, delta: float) -> IncrementResult:
    # f(x + v) − f(x) = gᵀv + vᵀMv with g = 2Mx
    eigenvalues, eigenvectors = form.spectrum
    g = 2.0 * form.matrix @ x
    lowest = solve_trust_region(2.0 * eigenvalues, eigenvectors, g, delta)
    highest = solve_trust_region(-2.0 * eigenvalues, eigenvectors, -g, delta)
    increase, decrease = -highest.value, -lowest.value
    if increase >= decrease:
        return IncrementResult(increase, highest.step, exact=True)
    return IncrementResult(decrease, lowest.step, exact=True)


def _project(v: FloatArray, delta: float) -> FloatArray:
    norm = float(np.linalg.norm(v))
    return v if norm <= delta else v * (delta / norm)


def _ascent_increment(
    predictor: Predictor,
    x: FloatArray,
    delta: float,
    restarts: int,
    steps: int,
    seed: int,
) -> IncrementResult:
    base = float(predictor.value(x)[0])

    def gap(v: FloatArray) -> float:
        return abs(float(predictor.value(x + v)[0]) - base)

    grad = predictor.gradient(x)[0]
    grad_norm = float(np.linalg.norm(grad))
    rng = make_rng(seed)
    starts: list[FloatArray] = []
    if grad_norm > 0.0:
        starts += [delta * grad / grad_norm, -delta * grad / grad_norm]
    while len(starts) < restarts:
        direction = rng.standard_normal(x.size)
        starts.append(delta * direction / np.linalg.norm(direction))

    best_value, best_v = 0.0, np.zeros_like(x)
    for start in starts[:restarts]:
        v = start
        current = gap(v)
        step = delta
        for _ in range(steps):
            sign = 1.0 if float(predictor.value(x + v)[0]) >= base else -1.0
            ascent = sign * predictor.gradient(x + v)[0]
            ascent_norm = float(np.linalg.norm(ascent))
            if ascent_norm == 0.0:
                break
            candidate = _project(v + step * ascent / ascent_norm, delta)
            value = gap(candidate)
            if value > current:
                v, current = candidate, value
                step *= 1.5
            else:
                step *= 0.5
                if step < 1e-12 * delta:
                    break
        if current > best_value:
            best_value, best_v = current, v
    return IncrementResult(best_value, best_v, exact=False)


def adversarial_increment(
    predictor: Predictor,
    x: FloatArray,
    delta: float,
    *,
    restarts: int = 8,
    steps: int = 200,
    seed: int = 0,
    force_ascent: bool = False,
) -> IncrementResult:
    """Δ_f(x; δ) = sup_{‖v‖≤δ} |f(x + v) − f(x)|.

    Exact for quadratic predictors (both trust-region extremes are solved);
    otherwise projected gradient ascent from ``restarts`` starts including
    ±δ∇f(x)/‖∇f(x)‖, flagged as a lower bound.

    >>> round(adversarial_increment(Predictor.quadratic(np.eye(2)), np.array([1.0, 0.0]), 0.5).value, 12)
    1.25
    """
    if delta <= 0.0:
        raise InvalidInputError("δ must be positive", delta=delta)
    point = np.asarray(x, dtype=np.float64)
    if predictor.quadratic_form is not None and not force_ascent:
        return _exact_increment(predictor.quadratic_form, point, delta)
    return _ascent_increment(predictor, point, delta, restarts, steps, seed)


@dataclass(frozen=True)
class IncrementRow:
    """Average first-order increment at one δ."""

    delta: float
    mean_ratio: float  # E[Δ/δ], compared with 𝔖₁
    mean_ratio_se: float
    rms_ratio: float  # (E[(Δ/δ)²])^{1/2}, compared with 𝔖
    exact: bool


@dataclass(frozen=True)
class IncrementTable:
    """Increment ratios across a δ grid plus the gradient-norm references."""

    rows: list[IncrementRow]
    grad_norm_mean: float  # 𝔖₁ on the same points
    grad_norm_rms: float  # 𝔖 on the same points

    def relative_gap(self) -> float:
        """|E[Δ/δ] − E‖∇f‖| / E‖∇f‖ at the smallest δ."""
        if self.grad_norm_mean == 0.0:
            return abs(self.rows[-1].mean_ratio)
        return abs(self.rows[-1].mean_ratio - self.grad_norm_mean) / self.grad_norm_mean

    def to_dict(self) -> dict[str, Any]:
        return {
            "grad_norm_mean": self.grad_norm_mean,
            "grad_norm_rms": self.grad_norm_rms,
            "rows": [row.__dict__ for row in self.rows],
        }


def increment_derivative_check(
    predictor: Predictor,
    n_points: int,
    delta_grid: Sequence[float],
    seed: int,
) -> IncrementTable:
    """Average Δ_f(x; δ)/δ over Gaussian points for each δ in a decreasing grid."""
    grid = [float(d) for d in delta_grid]
    if not grid or any(d <= 0.0 for d in grid):
        raise InvalidInputError("δ grid must be nonempty and positive", grid=grid)
    if any(b >= a for a, b in zip(grid, grid[1:], strict=False)):
        raise InvalidInputError("δ grid must be strictly decreasing", grid=grid)
    if n_points < 2:
        raise InvalidInputError("need at least two points", n_points=n_points)

    points = make_rng(seed).standard_normal((n_points, predictor.dim))
    grad_norms = np.linalg.norm(predictor.gradient(points), axis=1)

    rows = []
    for delta in grid:
        ratios = np.empty(n_points)
        exact = True
        for i, point in enumerate(points):
            result = adversarial_increment(
                predictor, point, delta, seed=derive_seed(seed, "ascent", i)
            )
            ratios[i] = result.value / delta
            exact = exact and result.exact
        rows.append(
            IncrementRow(
                delta=delta,
                mean_ratio=float(ratios.mean()),
                mean_ratio_se=float(ratios.std(ddof=1) / math.sqrt(n_points)),
                rms_ratio=float(np.sqrt(np.mean(ratios**2))),
                exact=exact,
            )
        )
    return IncrementTable(
        rows=rows,
        grad_norm_mean=float(grad_norms.mean()),
        grad_norm_rms=float(np.sqrt(np.mean(grad_norms**2))),
    )


@dataclass(frozen=True)
class UniversalPerturbation:
    """Top eigenpair of the sampled J(f) = E[∇f ∇fᵀ]."""

    eigenvalue: float
    direction: FloatArray
    trace: float  # trace of the same sampled J, i.e. an 𝔖(f)² estimate
    iterations: int
    converged: bool
    zero_field: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "eigenvalue": self.eigenvalue,
            "trace": self.trace,
            "iterations": self.iterations,
            "converged": self.converged,
            "zero_field": self.zero_field,
        }


def universal_perturbation(
    predictor: Predictor,
    n_samples: int,
    power_iters: int,
    seed: int,
) -> UniversalPerturbation:
    """Power method on J(f) estimated from one fixed gradient sample."""
    if power_iters < 1:
        raise InvalidInputError("power_iters must be at least 1", power_iters=power_iters)
    if n_samples < 1:
        raise InvalidInputError("n_samples must be at least 1", n_samples=n_samples)

    x = make_rng(derive_seed(seed, "points")).standard_normal((n_samples, predictor.dim))
    operator = GramOperator(dim=predictor.dim, rows=predictor.gradient(x), name="J(f)")
    result = power_iteration(
        operator, max_iterations=power_iters, tolerance=1e-8, seed=derive_seed(seed, "start")
    )
    if result.zero_operator:
        structured_log(logger, "warning", "zero gradient field", phase="audit", predictor=predictor.name)
    return UniversalPerturbation(
        eigenvalue=result.eigenvalue,
        direction=result.vector,
        trace=operator.trace(),
        iterations=result.iterations,
        converged=result.converged,
        zero_field=result.zero_operator,
    )


@dataclass(frozen=True)
class GradientCheck:
    """Central finite differences against the analytic gradient."""

    passed: bool
    max_relative_error: float
    n_probes: int


def gradient_check(
    predictor: Predictor,
    n_probes: int = 16,
    seed: int = 0,
    rtol: float = GRADIENT_CHECK_RTOL,
) -> GradientCheck:
    """Directional central differences with step 1e-5·(1 + ‖x‖)."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        x = rng.standard_normal(predictor.dim)
        u = rng.standard_normal(predictor.dim)
        u /= np.linalg.norm(u)
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
        forward = float(predictor.value(x + h * u)[0])
        backward = float(predictor.value(x - h * u)[0])
        numeric = (forward - backward) / (2.0 * h)
        grad = predictor.gradient(x)[0]
        analytic = float(grad @ u)
        scale = max(float(np.linalg.norm(grad)), 1e-8)
        worst = max(worst, abs(numeric - analytic) / scale)
    return GradientCheck(passed=worst <= rtol, max_relative_error=worst, n_probes=n_probes)


@dataclass(frozen=True)
class LipschitzRow:
    """Restricted Lipschitz constant against the Dirichlet measure for one d."""

    dim: int
    lipschitz: float  # 2√d‖B‖_op on the ball of radius √d
    sobolev: float  # 𝔖(f) = 2‖B‖_F
    sobolev_mc: float
    ratio: float


def lipschitz_comparison(
    dims: Sequence[int] = (10, 50, 200),
    n_samples: int = 20_000,
    seed: int = 0,
) -> list[LipschitzRow]:
    """For rank-one B = e₁e₁ᵀ the Lipschitz bound overstates 𝔖(f) by √d."""
    rows = []
    for dim in dims:
        b = np.zeros((dim, dim))
        b[0, 0] = 1.0
        truth = GroundTruth.centered(b)
        estimate = dirichlet_energy(Predictor.from_ground_truth(truth), n_samples, derive_seed(seed, dim))
        lipschitz = 2.0 * math.sqrt(dim) * 1.0
        sobolev = 2.0 * math.sqrt(truth.frob_sq)
        rows.append(
            LipschitzRow(
                dim=dim,
                lipschitz=lipschitz,
                sobolev=sobolev,
                sobolev_mc=math.sqrt(estimate.mean),
                ratio=lipschitz / sobolev,
            )
        )
    return rows


@dataclass(frozen=True)
class AuditReport:
    """Everything the audit measures for one predictor."""

    predictor: str
    dirichlet_sq: MonteCarloEstimate
    sq_q: dict[int, MonteCarloEstimate]
    jf_top: UniversalPerturbation
    increments: IncrementTable
    gradient: GradientCheck
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "predictor": self.predictor,
            "dirichlet_sq": self.dirichlet_sq.to_dict(),
            "sq_q": {str(q): est.to_dict() for q, est in self.sq_q.items()},
            "jf_top": self.jf_top.to_dict(),
            "increments": self.increments.to_dict(),
            "gradient_check": self.gradient.__dict__,
            "notes": self.notes,
        }


def run_audit(
    predictor: Predictor,
    *,
    n_samples: int = 20_000,
    seed: int = 0,
    delta_grid: Sequence[float] = (1e-1, 1e-2, 1e-3),
    n_points: int = 200,
    power_iters: int = 500,
) -> AuditReport:
    """Gradient check, 𝔖² and 𝔖₁, top of J(f) and the increment table."""
    check = gradient_check(predictor, seed=derive_seed(seed, "gradient"))
    if not check.passed:
        raise NumericalFailureError(
            "gradient inconsistent with value", predictor=predictor.name, error=check.max_relative_error
        )

    energy = dirichlet_energy(predictor, n_samples, derive_seed(seed, "energy"), q=2)
    first = dirichlet_energy(predictor, n_samples, derive_seed(seed, "energy"), q=1)
    top = universal_perturbation(predictor, n_samples, power_iters, derive_seed(seed, "jf"))
    increments = increment_derivative_check(predictor, n_points, delta_grid, derive_seed(seed, "inc"))

    notes = []
    if top.eigenvalue > top.trace * (1.0 + 1e-10):
        notes.append("top eigenvalue of J exceeds its trace")
    if not top.converged:
        notes.append("power iteration hit its cap")
    return AuditReport(
        predictor=predictor.name,
        dirichlet_sq=energy,
        sq_q={1: first, 2: energy},
        jf_top=top,
        increments=increments,
        gradient=check,
        notes=notes,
    )


def write_audit_reports(reports: Sequence[AuditReport], path: Path) -> Path:
    """Append audit reports to a JSON Lines sidecar."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with jsonlines.open(path, mode="a") as writer:
        for report in reports:
            writer.write(report.to_dict())
    return path
