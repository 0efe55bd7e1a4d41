"""Acceptance suite.

Each criterion is a registered check that runs a small experiment and
compares it against a closed form, an identity or a Monte-Carlo estimate.
Suites fix the problem sizes:

- ``default``: all twelve criteria at the documented sizes,
- ``quick``: the same checks at reduced sizes (minutes, not all tolerances
  are calibrated for the small dimensions),
- ``full``: the RF and NT criteria rerun at d = 450.

Two hooks exist for negative controls: ``zero_theory`` replaces every theory
value by 0 and ``tolerance_scale`` multiplies every tolerance.
"""

from __future__ import annotations

import math
import time
from collections import defaultdict
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import jsonlines
import numpy as np

from robustlab.activation import get_activation, scale_constants
from robustlab.audit import (
    Predictor,
    dirichlet_energy,
    increment_derivative_check,
    universal_perturbation,
)
from robustlab.engine.norms import symmetric_op_norm
from robustlab.engine.spectral import alignment, sorted_eigh
from robustlab.exceptions import ConfigurationError
from robustlab.harness.config import ExperimentConfig, MonteCarloSettings, RegimeSpec
from robustlab.harness.presets import (
    ALIGNED,
    HALF_RANK_B,
    ISOTROPIC,
    LARGE_INIT_B,
    SMALL_INIT_B,
    get_preset,
)
from robustlab.harness.results import ResultRow
from robustlab.harness.runner import ROW_ERRORS, run_experiment
from robustlab.model import (
    CovarianceDescriptor,
    GroundTruth,
    NeuronEnsemble,
    Normalization,
    SpectrumKind,
    SpectrumProfile,
    make_ground_truth,
    sample_ensemble,
)
from robustlab.population import linearization_errors, population_matrices
from robustlab.regimes import eval_init, eval_sgd_limit, fit_nt, fit_ntl, fit_rf, fit_rfl
from robustlab.theory import (
    TheoryInputs,
    predict,
    predict_rf_asymptote,
    rf_quadratic_tradeoff_symbolic,
    tradeoff_residual,
)
from robustlab.types import FloatArray, Regime
from robustlab.utils.logging import get_logger, structured_log
from robustlab.utils.rng import derive_seed, make_rng

logger = get_logger(__name__)

THEORY_TOLERANCE = 0.05
ASYMPTOTE_TOLERANCE = 0.07
IDENTITY_TOLERANCE = 1e-12
RIDGE_CEILING = 0.05
NTL_RELATIVE_TOLERANCE = 1e-10
INCREMENT_GAP = 0.02
COSINE_FLOOR = 0.99
MC_SE = 5.0
PAIRED_SE = 3.0

Measured = dict[str, Any]


@dataclass(frozen=True)
class SuiteSettings:
    """Problem sizes and hooks of one acceptance run."""

    name: str
    criteria: tuple[int, ...] = tuple(range(1, 13))
    seed: int = 0
    # 1: ground-truth robustness
    gt_dim: int = 300
    gt_samples: int = 200_000
    # 2: SGD identity
    sgd_pairs: int = 20
    # 3, 4: RF sweeps
    rf_dim: int = 300
    rf_rhos: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    rf_seeds: int = 5
    asymptote_dim: int = 300
    asymptote_rho: float = 8.0
    asymptote_seeds: int = 2
    # 5, 6: ridge and lazy RF
    ridge_dim: int = 200
    ridge_width: int = 400
    ridge_seeds: int = 3
    lazy_init_seeds: int = 50
    # 7: init
    init_dim: int = 300
    init_width: int = 900
    init_seeds: int = 10
    # 8, 9: NT and NTL
    nt_dim: int = 400
    nt_rhos: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0, 1.5)
    nt_seeds: int = 10
    ntl_init_seeds: int = 50
    # 10: linearization
    shrink_dims: tuple[int, int] = (100, 400)
    shrink_width: int = 50
    shrink_seeds: int = 10
    # 11: audit
    audit_dim: int = 50
    audit_points: int = 200
    audit_samples: int = 20_000
    # 12: cross-module consistency
    consistency_preset: str = "smoke"
    # hooks
    zero_theory: bool = False
    tolerance_scale: float = 1.0
    workers: int = 1

    def tol(self, value: float) -> float:
        return value * self.tolerance_scale

    def theory(self, value: float) -> float:
        return 0.0 if self.zero_theory else value


Check = Callable[[SuiteSettings], tuple[bool, Measured]]


SUITES: dict[str, SuiteSettings] = {
    "default": SuiteSettings(name="default"),
    "quick": SuiteSettings(
        name="quick",
        gt_dim=50,
        gt_samples=20_000,
        rf_dim=60,
        rf_seeds=2,
        asymptote_dim=60,
        asymptote_seeds=1,
        ridge_dim=40,
        ridge_width=80,
        ridge_seeds=2,
        lazy_init_seeds=30,
        init_dim=60,
        init_width=180,
        init_seeds=5,
        nt_dim=80,
        nt_seeds=3,
        ntl_init_seeds=20,
        shrink_dims=(30, 120),
        shrink_width=20,
        shrink_seeds=5,
        audit_dim=20,
        audit_points=50,
        audit_samples=5_000,
    ),
    "full": SuiteSettings(
        name="full",
        criteria=(3, 4, 8, 9),
        rf_dim=450,
        asymptote_dim=450,
        nt_dim=450,
    ),
}


def get_suite(name: str, **overrides: Any) -> SuiteSettings:
    """Suite settings by name with hook or size overrides applied."""
    key = name.strip().lower()
    if key not in SUITES:
        valid = ", ".join(sorted(SUITES))
        raise ConfigurationError(f"Unknown suite '{name}'. Valid options: {valid}", key="suite")
    try:
        return replace(SUITES[key], **overrides)
    except TypeError as e:
        raise ConfigurationError(str(e), key="suite") from e


@dataclass(frozen=True)
class Criterion:
    """A registered acceptance check."""

    number: int
    name: str
    description: str
    check: Check


CRITERIA: dict[int, Criterion] = {}


def criterion(number: int, name: str, description: str) -> Callable[[Check], Check]:
    """Register a check under ``number``."""

    def register(check: Check) -> Check:
        CRITERIA[number] = Criterion(number, name, description, check)
        return check

    return register


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: Measured = field(default_factory=dict)
    duration_ms: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "duration_ms": self.duration_ms,
            "error": self.error,
        }


@dataclass(frozen=True)
class AcceptanceReport:
    """Per-criterion results of one suite run."""

    suite: str
    results: list[CriterionResult]

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    @property
    def failed(self) -> list[CriterionResult]:
        return [r for r in self.results if not r.passed]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "criteria": [r.to_dict() for r in self.results],
        }

    def write(self, path: Path) -> Path:
        """One JSON line per criterion followed by an overall summary line."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with jsonlines.open(path, mode="w") as writer:
            for result in self.results:
                writer.write({"suite": self.suite, **result.to_dict()})
            writer.write(
                {
                    "suite": self.suite,
                    "summary": True,
                    "passed": self.passed,
                    "failed": [r.number for r in self.failed],
                }
            )
        return path


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    array = np.asarray(values, dtype=np.float64)
    if array.size < 2:
        return float(array.mean()), math.inf
    return float(array.mean()), float(array.std(ddof=1) / math.sqrt(array.size))


def _ensemble(covariance: CovarianceDescriptor, m: int, seed: int) -> NeuronEnsemble:
    return sample_ensemble(covariance, m, derive_seed(seed, "ensemble", m))


def _widths(dim: int, rhos: Sequence[float]) -> tuple[int, ...]:
    return tuple(max(1, round(rho * dim)) for rho in rhos)


def _sweep(settings: SuiteSettings, config: ExperimentConfig) -> list[ResultRow]:
    return run_experiment(config, workers=settings.workers, write=False).rows


def _rf_config(
    settings: SuiteSettings, label: str, dim: int, widths: tuple[int, ...], seeds: int, covariance: Any
) -> ExperimentConfig:
    return ExperimentConfig(
        name=f"acceptance-{label}-d{dim}",
        dim=dim,
        regimes=(RegimeSpec(Regime.RF),),
        seeds=tuple(settings.seed + s for s in range(seeds)),
        ground_truth=HALF_RANK_B,
        covariance=covariance,
        m_grid=widths,
        mc=MonteCarloSettings(enabled=False),
    )


def _by_width(rows: Sequence[ResultRow]) -> dict[int, list[ResultRow]]:
    groups: dict[int, list[ResultRow]] = defaultdict(list)
    for row in rows:
        groups[row.m].append(row)
    return dict(sorted(groups.items()))


@criterion(1, "ground-truth-robustness", "MC Dirichlet energy of f⋆ matches 4‖B‖_F² within 5 SE")
def check_ground_truth_robustness(settings: SuiteSettings) -> tuple[bool, Measured]:
    profiles = {
        "identity-frobenius": SMALL_INIT_B,
        "identity-trace": LARGE_INIT_B,
        "half-rank": HALF_RANK_B,
        "power-law": SpectrumProfile(
            kind=SpectrumKind.POWER_LAW, normalization=Normalization.FROBENIUS, rotation_seed=settings.seed
        ),
        "low-rank": SpectrumProfile(
            kind=SpectrumKind.RANK_FLAT,
            rank_fraction=0.1,
            normalization=Normalization.FROBENIUS,
            rotation_seed=settings.seed + 1,
        ),
    }
    z_scores = {}
    for label, profile in profiles.items():
        gt = make_ground_truth(profile, settings.gt_dim)
        estimate = dirichlet_energy(
            Predictor.from_ground_truth(gt), settings.gt_samples, derive_seed(settings.seed, "gt", label)
        )
        z_scores[label] = estimate.z_score(gt.dirichlet_sq)
    worst = max(z_scores.values())
    return worst <= settings.tol(MC_SE), {"z_scores": z_scores, "worst_z": worst}


def _random_psd(rng: np.random.Generator, dim: int, rank: int) -> FloatArray:
    factor = rng.standard_normal((dim, rank))
    out: FloatArray = factor @ factor.T / dim
    return out


@criterion(2, "sgd-tradeoff-identity", "egen + erob = 1 for the SGD limit, RF closed forms sum to one")
def check_sgd_identity(settings: SuiteSettings) -> tuple[bool, Measured]:
    rng = make_rng(derive_seed(settings.seed, "sgd"))
    residuals = []
    for index in range(settings.sgd_pairs):
        dim = int(rng.integers(10, 41))
        rank = int(rng.integers(1, dim + 1))
        # cycle through m < rank, m = rank, m > d and a free draw
        choice = index % 4
        if choice == 0:
            m = max(1, rank - 1)
        elif choice == 1:
            m = rank
        elif choice == 2:
            m = dim + int(rng.integers(1, 10))
        else:
            m = int(rng.integers(1, 2 * dim))
        evaluation = eval_sgd_limit(GroundTruth.centered(_random_psd(rng, dim, rank)), m)
        residuals.append(abs(tradeoff_residual(Regime.SGD_LIMIT, evaluation)))
    symbolic = rf_quadratic_tradeoff_symbolic()
    worst = max(residuals)
    passed = worst < settings.tol(IDENTITY_TOLERANCE) and symbolic == 0
    return passed, {"worst_residual": worst, "pairs": len(residuals), "symbolic_residual": str(symbolic)}


@criterion(3, "rf-theory-match", "RF exact egen/erob within 0.05 of theory, Γ ∝ B and Γ = I/d")
def check_rf_theory(settings: SuiteSettings) -> tuple[bool, Measured]:
    widths = _widths(settings.rf_dim, settings.rf_rhos)
    gaps: dict[str, dict[int, tuple[float, float]]] = {}
    failed_rows = 0
    for label, covariance in (("aligned", ALIGNED), ("isotropic", ISOTROPIC)):
        config = _rf_config(settings, f"rf-{label}", settings.rf_dim, widths, settings.rf_seeds, covariance)
        rows = _sweep(settings, config)
        failed_rows += sum(1 for row in rows if row.failed or row.egen_theory is None)
        gaps[label] = {}
        for m, members in _by_width([r for r in rows if not r.failed]).items():
            exact_gen, _ = _mean_se([r.egen_exact or 0.0 for r in members])
            exact_rob, _ = _mean_se([r.erob_exact or 0.0 for r in members])
            theory_gen, _ = _mean_se([settings.theory(r.egen_theory or 0.0) for r in members])
            theory_rob, _ = _mean_se([settings.theory(r.erob_theory or 0.0) for r in members])
            gaps[label][m] = (abs(exact_gen - theory_gen), abs(exact_rob - theory_rob))
    worst = max((max(pair) for table in gaps.values() for pair in table.values()), default=math.inf)
    passed = failed_rows == 0 and worst <= settings.tol(THEORY_TOLERANCE)
    return passed, {"worst_gap": worst, "failed_rows": failed_rows, "gaps": gaps}


@criterion(4, "rf-asymptotes", "RF at m = 8d within 0.07 of (1 − α∞², α∞²)")
def check_rf_asymptotes(settings: SuiteSettings) -> tuple[bool, Measured]:
    dim = settings.asymptote_dim
    width = round(settings.asymptote_rho * dim)
    gt = make_ground_truth(HALF_RANK_B, dim)
    measured: Measured = {}
    passed = True
    for label, covariance in (("aligned", ALIGNED), ("isotropic", ISOTROPIC)):
        config = _rf_config(settings, f"asymptote-{label}", dim, (width,), settings.asymptote_seeds, covariance)
        rows = _sweep(settings, config)
        good = [r for r in rows if not r.failed]
        alpha = alignment(gt.b_matrix, covariance.build(gt).gamma)
        egen_limit, erob_limit = (settings.theory(v) for v in predict_rf_asymptote(alpha))
        egen, _ = _mean_se([r.egen_exact or 0.0 for r in good]) if good else (math.nan, 0.0)
        erob, _ = _mean_se([r.erob_exact or 0.0 for r in good]) if good else (math.nan, 0.0)
        gap = max(abs(egen - egen_limit), abs(erob - erob_limit))
        passed = passed and len(good) == len(rows) and gap <= settings.tol(ASYMPTOTE_TOLERANCE)
        measured[label] = {"alpha_sq": alpha**2, "egen": egen, "erob": erob, "gap": gap}
    return passed, measured


@criterion(5, "ridge-monotonicity", "RF erob nonincreasing in λ, below 0.05 at λ = 100‖U‖_op")
def check_ridge_monotonicity(settings: SuiteSettings) -> tuple[bool, Measured]:
    ridges = (0.0, 0.1, 1.0, 10.0, 100.0)
    gt = make_ground_truth(HALF_RANK_B, settings.ridge_dim)
    covariance = CovarianceDescriptor.isotropic(settings.ridge_dim)
    profile = get_activation("quadratic")
    monotone = True
    ceilings = []
    for seed in range(settings.ridge_seeds):
        ensemble = _ensemble(covariance, settings.ridge_width, settings.seed + seed)
        population = population_matrices(ensemble, profile, gt)
        erobs = [fit_rf(ensemble, profile, gt, ridge, population).erob for ridge in ridges]
        # round-off slack only
        monotone = monotone and all(b <= a * (1.0 + 1e-10) for a, b in zip(erobs, erobs[1:], strict=False))
        big = 100.0 * symmetric_op_norm(population.u)
        ceilings.append(fit_rf(ensemble, profile, gt, big, population).erob)
    worst = max(ceilings)
    return monotone and worst < settings.tol(RIDGE_CEILING), {"monotone": monotone, "erob_at_large_ridge": worst}


@criterion(6, "lazy-rf-corrections", "RFL − RF matches the P_λ trace corrections within 3 SE")
def check_lazy_rf(settings: SuiteSettings) -> tuple[bool, Measured]:
    ridge = 1.0
    gt = make_ground_truth(HALF_RANK_B, settings.ridge_dim)
    covariance = CovarianceDescriptor.isotropic(settings.ridge_dim)
    profile = get_activation("quadratic")
    ensemble = _ensemble(covariance, settings.ridge_width, settings.seed)
    population = population_matrices(ensemble, profile, gt)
    rf = fit_rf(ensemble, profile, gt, ridge, population)

    gen_gaps, rob_gaps = [], []
    trace_u = trace_c = 0.0
    for init_seed in range(settings.lazy_init_seeds):
        lazy = fit_rfl(ensemble, profile, gt, ridge, init_seed, population)
        gen_gaps.append(lazy.egen - rf.egen)
        rob_gaps.append(lazy.erob - rf.erob)
        trace_u, trace_c = lazy.params["trace_p2u"], lazy.params["trace_p2c"]
    target_gen = settings.theory(trace_u / (2.0 * gt.frob_sq))
    target_rob = settings.theory(trace_c / (4.0 * gt.frob_sq))
    gen_mean, gen_se = _mean_se(gen_gaps)
    rob_mean, rob_se = _mean_se(rob_gaps)
    passed = abs(gen_mean - target_gen) <= settings.tol(PAIRED_SE) * gen_se and abs(
        rob_mean - target_rob
    ) <= settings.tol(PAIRED_SE) * rob_se
    return passed, {
        "egen_gap": gen_mean,
        "egen_gap_se": gen_se,
        "egen_target": target_gen,
        "erob_gap": rob_mean,
        "erob_gap_se": rob_se,
        "erob_target": target_rob,
    }


@criterion(7, "init-formulas", "INIT mean egen/erob within 0.05 of the closed forms")
def check_init(settings: SuiteSettings) -> tuple[bool, Measured]:
    dim = settings.init_dim
    gt = make_ground_truth(SMALL_INIT_B, dim)
    covariance = CovarianceDescriptor.isotropic(dim)
    profile = get_activation("quadratic")
    egens, erobs = [], []
    for seed in range(settings.init_seeds):
        ensemble = _ensemble(covariance, settings.init_width, settings.seed + seed)
        evaluation = eval_init(ensemble, profile, gt, derive_seed(settings.seed + seed, "init"))
        egens.append(evaluation.egen)
        erobs.append(evaluation.erob)
    prediction = predict(
        Regime.INIT, TheoryInputs.from_setup(gt, covariance, profile, settings.init_width)
    )
    egen_gap = abs(float(np.mean(egens)) - settings.theory(prediction.egen))
    erob_gap = abs(float(np.mean(erobs)) - settings.theory(prediction.erob))
    passed = max(egen_gap, erob_gap) <= settings.tol(THEORY_TOLERANCE)
    return passed, {
        "egen_mean": float(np.mean(egens)),
        "erob_mean": float(np.mean(erobs)),
        "egen_theory": prediction.egen,
        "erob_theory": prediction.erob,
        "egen_gap": egen_gap,
        "erob_gap": erob_gap,
    }


@criterion(8, "nt-curves", "NT mean egen/erob within 0.05 of (1 − ρ)₊ and ρ̲, sum-to-one")
def check_nt(settings: SuiteSettings) -> tuple[bool, Measured]:
    dim = settings.nt_dim
    gt = make_ground_truth(SMALL_INIT_B, dim)
    covariance = CovarianceDescriptor.isotropic(dim)
    profile = get_activation("quadratic")
    gaps: dict[int, tuple[float, float]] = {}
    worst_residual = 0.0
    for m in _widths(dim, settings.nt_rhos):
        evaluations = [
            fit_nt(_ensemble(covariance, m, settings.seed + seed), gt) for seed in range(settings.nt_seeds)
        ]
        prediction = predict(Regime.NT, TheoryInputs.from_setup(gt, covariance, profile, m))
        egen = float(np.mean([e.egen for e in evaluations]))
        erob = float(np.mean([e.erob for e in evaluations]))
        gaps[m] = (
            abs(egen - settings.theory(prediction.egen)),
            abs(erob - settings.theory(prediction.erob)),
        )
        worst_residual = max(
            worst_residual,
            *(abs(tradeoff_residual(Regime.NT, e, beta=gt.summary.beta)) for e in evaluations),
        )
    worst = max(max(pair) for pair in gaps.values())
    passed = worst <= settings.tol(THEORY_TOLERANCE) and worst_residual <= settings.tol(THEORY_TOLERANCE)
    return passed, {"worst_gap": worst, "worst_tradeoff_residual": worst_residual, "gaps": gaps}


@criterion(9, "ntl-decomposition", "NTL egen equals NT egen, erob(NTL) − erob(NT) matches INIT")
def check_ntl(settings: SuiteSettings) -> tuple[bool, Measured]:
    dim = settings.nt_dim
    gt = make_ground_truth(LARGE_INIT_B, dim)
    covariance = CovarianceDescriptor.isotropic(dim)
    profile = get_activation("quadratic")
    worst_relative = 0.0
    z_scores: dict[int, float] = {}
    for m in _widths(dim, settings.nt_rhos):
        differences = []
        for seed in range(settings.nt_seeds):
            ensemble = _ensemble(covariance, m, settings.seed + seed)
            nt = fit_nt(ensemble, gt)
            population = population_matrices(ensemble, profile, gt)
            for init_seed in range(settings.ntl_init_seeds):
                lazy = fit_ntl(ensemble, gt, init_seed)
                init = eval_init(ensemble, profile, gt, init_seed, population)
                scale = max(abs(nt.egen), 1.0)
                worst_relative = max(worst_relative, abs(lazy.egen - nt.egen) / scale)
                differences.append(lazy.erob - nt.erob - init.erob)
        mean, se = _mean_se(differences)
        z_scores[m] = abs(mean) / se if se > 0.0 else (0.0 if mean == 0.0 else math.inf)
    worst_z = max(z_scores.values())
    passed = worst_relative <= settings.tol(NTL_RELATIVE_TOLERANCE) and worst_z <= settings.tol(PAIRED_SE)
    return passed, {"worst_egen_relative": worst_relative, "worst_z": worst_z, "z_scores": z_scores}


@criterion(10, "linearization-shrinkage", "‖U − U₀‖, ‖C − C₀‖, ‖v − τ/√d‖ shrink as d grows")
def check_linearization(settings: SuiteSettings) -> tuple[bool, Measured]:
    small, large = settings.shrink_dims
    measured: Measured = {}
    passed = True
    for name in ("tanh", "quadratic"):
        profile = get_activation(name)
        medians: dict[int, dict[str, float]] = {}
        for dim in (small, large):
            gt = make_ground_truth(SMALL_INIT_B, dim)
            covariance = CovarianceDescriptor.isotropic(dim)
            constants = scale_constants(profile, gt.b_matrix, covariance.gamma)
            samples: dict[str, list[float]] = defaultdict(list)
            for seed in range(settings.shrink_seeds):
                ensemble = _ensemble(covariance, settings.shrink_width, settings.seed + seed)
                population = population_matrices(ensemble, profile, gt)
                for key, value in linearization_errors(ensemble, population, constants).items():
                    samples[key].append(value)
            medians[dim] = {key: float(np.median(values)) for key, values in samples.items()}
        shrinks = all(medians[large][key] < medians[small][key] for key in medians[small])
        passed = passed and shrinks
        measured[name] = medians
    return passed, measured


@criterion(11, "audit", "increment check within 2% at δ = 1e-3, universal direction |cos| ≥ 0.99")
def check_audit(settings: SuiteSettings) -> tuple[bool, Measured]:
    dim = settings.audit_dim
    target = make_ground_truth(
        SpectrumProfile(kind=SpectrumKind.POWER_LAW, normalization=Normalization.FROBENIUS, rotation_seed=settings.seed),
        dim,
    )
    table = increment_derivative_check(
        Predictor.from_ground_truth(target), settings.audit_points, (1e-1, 1e-2, 1e-3), settings.seed
    )
    gap = table.relative_gap()

    # top eigenvalue 2, the rest in [0, 1]
    spectrum = (2.0, *np.linspace(1.0, 0.0, dim - 1).tolist())
    b_matrix = make_ground_truth(
        SpectrumProfile(kind=SpectrumKind.CUSTOM, values=spectrum, rotation_seed=settings.seed + 1), dim
    ).b_matrix
    top = sorted_eigh(b_matrix)[1][:, 0]
    universal = universal_perturbation(
        Predictor.quadratic(b_matrix), settings.audit_samples, 500, derive_seed(settings.seed, "universal")
    )
    cosine = abs(float(universal.direction @ top))
    passed = (
        table.rows[-1].exact
        and gap <= settings.tol(INCREMENT_GAP)
        and cosine >= 1.0 - settings.tol(1.0 - COSINE_FLOOR)
    )
    return passed, {"increment_gap": gap, "exact": table.rows[-1].exact, "cosine": cosine}


@criterion(12, "cross-module-consistency", "every suite row has exact values within 5 SE of MC")
def check_consistency(settings: SuiteSettings) -> tuple[bool, Measured]:
    worst = 0.0
    failed_rows = 0
    n_rows = 0
    for config in get_preset(settings.consistency_preset):
        for row in _sweep(settings, config):
            n_rows += 1
            if row.failed or row.egen_mc is None or row.erob_mc is None:
                failed_rows += 1
                continue
            for exact, mc, se in (
                (row.egen_exact, row.egen_mc, row.egen_mc_se),
                (row.erob_exact, row.erob_mc, row.erob_mc_se),
            ):
                gap = abs((exact or 0.0) - mc)
                z = 0.0 if gap == 0.0 else (gap / se if se else math.inf)
                worst = max(worst, z)
    passed = failed_rows == 0 and worst <= settings.tol(MC_SE)
    return passed, {"rows": n_rows, "failed_rows": failed_rows, "worst_z": worst}


def run_criterion(item: Criterion, settings: SuiteSettings) -> CriterionResult:
    """Run one check; numerical failures become a failed result."""
    start = time.perf_counter()
    try:
        passed, measured = item.check(settings)
        error = None
    except ROW_ERRORS as e:
        passed, measured, error = False, {}, f"{type(e).__name__}: {e}"
    result = CriterionResult(
        number=item.number,
        name=item.name,
        passed=bool(passed),
        measured=measured,
        duration_ms=(time.perf_counter() - start) * 1000.0,
        error=error,
    )
    structured_log(
        logger,
        "info" if result.passed else "warning",
        "criterion finished",
        phase="acceptance",
        run_id=settings.name,
        criterion=item.number,
        name=item.name,
        passed=result.passed,
        duration_ms=round(result.duration_ms, 1),
        error=error,
    )
    return result


def verify_acceptance(
    suite: str | SuiteSettings = "default",
    report_path: Path | None = None,
    on_start: Callable[[Criterion], None] | None = None,
    **overrides: Any,
) -> AcceptanceReport:
    """Run a suite and return one result per criterion.

    ``overrides`` replace suite fields, e.g. ``criteria=(2,)``,
    ``zero_theory=True`` or ``tolerance_scale=0.0``.
    """
    settings = get_suite(suite, **overrides) if isinstance(suite, str) else replace(suite, **overrides)
    unknown = sorted(set(settings.criteria) - set(CRITERIA))
    if unknown:
        raise ConfigurationError("unknown criteria", key="criteria", value=unknown)

    results = []
    for number in settings.criteria:
        item = CRITERIA[number]
        if on_start is not None:
            on_start(item)
        results.append(run_criterion(item, settings))
    report = AcceptanceReport(suite=settings.name, results=results)
    structured_log(
        logger,
        "info",
        "acceptance finished",
        phase="acceptance",
        run_id=settings.name,
        passed=report.passed,
        failed=[r.number for r in report.failed],
    )
    if report_path is not None:
        report.write(report_path)
    return report
