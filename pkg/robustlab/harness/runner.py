"""Sweep execution.

A sweep is split into ensemble tasks, one per (m, ensemble seed). Each task
draws W once, assembles the population matrices once and then evaluates every
configured (regime, ridge, init seed) row on that ensemble. Tasks run in a
process pool; rows are sorted into canonical order before anything is written,
so results do not depend on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from robustlab.activation import ActivationProfile, get_activation
from robustlab.exceptions import RobustLabError
from robustlab.harness.config import ExperimentConfig, RegimeSpec
from robustlab.harness.plotting import plot_results
from robustlab.harness.results import ResultRow, sort_rows, write_csv, write_failures
from robustlab.model import CovarianceDescriptor, GroundTruth, NeuronEnsemble, sample_ensemble
from robustlab.population import PopulationMatrices, dump_population, population_matrices
from robustlab.regimes import (
    RegimeEvaluation,
    eval_init,
    eval_sgd_limit,
    fit_nt,
    fit_ntl,
    fit_rf,
    fit_rfl,
    ground_truth_norm_check,
    monte_carlo_errors,
)
from robustlab.theory import (
    PsiMethod,
    PsiPair,
    TheoryInputs,
    TheoryPrediction,
    predict,
    psi_estimate,
    psi_silverstein,
)
from robustlab.types import Regime
from robustlab.utils.logging import get_logger, structured_log
from robustlab.utils.rng import derive_seed

logger = get_logger(__name__)

FAILURE_THRESHOLD = 0.10
ROW_ERRORS = (RobustLabError, ArithmeticError, ValueError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class EnsembleTask:
    """All rows sharing one draw of W."""

    m: int
    ensemble_seed: int


def plan_tasks(config: ExperimentConfig) -> list[EnsembleTask]:
    return [EnsembleTask(m, seed) for m in config.widths() for seed in config.seeds]


def expected_rows(config: ExperimentConfig) -> int:
    """Rows a sweep produces: widths × seeds × Σ (ridges × init seeds)."""
    per_ensemble = sum(len(spec.row_keys()) for spec in config.regimes)
    return len(config.widths()) * len(config.seeds) * per_ensemble


@dataclass
class _EnsembleContext:
    """Shared state for the rows of one task."""

    config: ExperimentConfig
    ground_truth: GroundTruth
    covariance: CovarianceDescriptor
    profile: ActivationProfile
    ensemble: NeuronEnsemble
    _population: PopulationMatrices | None = None
    _psi: dict[float, PsiPair] = field(default_factory=dict)

    @property
    def population(self) -> PopulationMatrices:
        if self._population is None:
            self._population = population_matrices(self.ensemble, self.profile, self.ground_truth)
            if self.config.outputs.dump_population:
                stem = f"{self.config.name}_m{self.ensemble.width}_s{self.ensemble.seed}"
                dump_population(self._population, self.config.outputs.directory / "population", stem)
        return self._population

    def psi(self, ridge: float) -> PsiPair:
        if ridge not in self._psi:
            settings = self.config.psi
            rho = self.ensemble.rho
            if settings.method is PsiMethod.SILVERSTEIN:
                self._psi[ridge] = psi_silverstein(
                    self.covariance.scaled_spectrum(), self.profile, rho, settings.tolerance, ridge
                )
            else:
                self._psi[ridge] = psi_estimate(
                    self.covariance, self.profile, rho, settings.n_rep, settings.seed, ridge
                )
        return self._psi[ridge]


def _evaluate(
    context: _EnsembleContext, regime: Regime, ridge: float | None, init_seed: int | None
) -> RegimeEvaluation:
    gt, ensemble, profile = context.ground_truth, context.ensemble, context.profile
    lam = ridge or 0.0
    seed = init_seed or 0
    if regime is Regime.SGD_LIMIT:
        return eval_sgd_limit(gt, ensemble.width)
    if regime is Regime.NT:
        return fit_nt(ensemble, gt, profile)
    if regime is Regime.NTL:
        return fit_ntl(ensemble, gt, seed, profile=profile)

    population = context.population
    if regime in (Regime.RF, Regime.RF_RIDGE):
        return fit_rf(ensemble, profile, gt, lam, population)
    if regime is Regime.RFL:
        return fit_rfl(ensemble, profile, gt, lam, seed, population)
    return eval_init(ensemble, profile, gt, seed, population)


def _theory(context: _EnsembleContext, evaluation: RegimeEvaluation) -> TheoryPrediction | None:
    regime = evaluation.regime
    ridge = evaluation.ridge or 0.0
    try:
        psi = context.psi(ridge) if regime in (Regime.RF, Regime.RF_RIDGE, Regime.RFL) else None
        inputs = TheoryInputs.from_setup(
            context.ground_truth,
            context.covariance,
            context.profile,
            evaluation.width,
            psi=psi,
            ridge=ridge,
            trace_p2u=evaluation.params.get("trace_p2u"),
            trace_p2c=evaluation.params.get("trace_p2c"),
        )
        return predict(regime, inputs)
    except RobustLabError as e:
        structured_log(
            logger, "warning", "no theory prediction", phase="sweep", regime=regime.value, error=str(e)
        )
        return None


def _row(
    context: _EnsembleContext, spec: RegimeSpec, ridge: float | None, init_seed: int | None
) -> ResultRow:
    config, ensemble = context.config, context.ensemble
    base = {
        "d": config.dim,
        "m": ensemble.width,
        "rho": ensemble.rho,
        "ridge": ridge,
        "ensemble_seed": ensemble.seed,
        "init_seed": init_seed,
        "experiment": config.name,
    }
    start = time.perf_counter()
    try:
        evaluation = _evaluate(context, spec.regime, ridge, init_seed)
        prediction = _theory(context, evaluation)
        mc_values: dict[str, float | None] = {}
        if config.mc.enabled:
            mc_seed = derive_seed(
                ensemble.seed, "mc", spec.regime.value, ensemble.width, repr(ridge), str(init_seed)
            )
            estimates = monte_carlo_errors(
                evaluation, context.ground_truth, config.mc.n_samples, mc_seed, config.mc.batch_size
            )
            mc_values = {
                "egen_mc": estimates.egen.mean,
                "egen_mc_se": estimates.egen.se,
                "erob_mc": estimates.erob.mean,
                "erob_mc_se": estimates.erob.se,
            }
        return ResultRow(
            regime=spec.regime,
            egen_exact=evaluation.egen,
            erob_exact=evaluation.erob,
            egen_theory=prediction.egen if prediction else None,
            erob_theory=prediction.erob if prediction else None,
            wall_time_ms=(time.perf_counter() - start) * 1000.0,
            **base,
            **mc_values,
        )
    except ROW_ERRORS as e:
        structured_log(
            logger,
            "error",
            "row failed",
            phase="sweep",
            run_id=config.name,
            regime=spec.regime.value,
            m=ensemble.width,
            ensemble_seed=ensemble.seed,
            init_seed=init_seed,
            error=f"{type(e).__name__}: {e}",
        )
        return ResultRow(
            regime=spec.regime,
            wall_time_ms=(time.perf_counter() - start) * 1000.0,
            error=f"{type(e).__name__}: {e}",
            **base,
        )


def run_ensemble(config: ExperimentConfig, task: EnsembleTask) -> list[ResultRow]:
    """Every configured row for one (m, ensemble seed)."""
    ground_truth = config.build_ground_truth()
    covariance = config.covariance.build(ground_truth)
    profile = get_activation(config.activation, config.activation_shift)
    ensemble = sample_ensemble(
        covariance, task.m, derive_seed(task.ensemble_seed, "ensemble", task.m)
    )
    # rows report the configured seed, not the derived stream
    ensemble = NeuronEnsemble(weights=ensemble.weights, covariance=covariance, seed=task.ensemble_seed)
    context = _EnsembleContext(config, ground_truth, covariance, profile, ensemble)
    return [
        _row(context, spec, ridge, init_seed)
        for spec in config.regimes
        for ridge, init_seed in spec.row_keys()
    ]


@dataclass(frozen=True)
class ExperimentResult:
    """Rows and files of one sweep."""

    config: ExperimentConfig
    rows: list[ResultRow]
    csv_path: Path | None = None
    failures_path: Path | None = None
    figures: list[Path] = field(default_factory=list)

    @property
    def failed_rows(self) -> list[ResultRow]:
        return [row for row in self.rows if row.failed]

    @property
    def failure_ratio(self) -> float:
        return len(self.failed_rows) / len(self.rows) if self.rows else 0.0

    @property
    def exit_code(self) -> int:
        """0 when at most 10% of rows failed, 1 otherwise."""
        return 0 if self.failure_ratio <= FAILURE_THRESHOLD else 1


class ExperimentRunner:
    """Runs a configuration and writes its CSV, failure sidecar and figures."""

    def __init__(self, config: ExperimentConfig, workers: int = 1, write: bool = True) -> None:
        self.config = config
        self.workers = max(1, workers)
        self.write = write

    def compute_rows(self) -> list[ResultRow]:
        tasks = plan_tasks(self.config)
        job = partial(run_ensemble, self.config)
        if self.workers == 1 or len(tasks) == 1:
            batches = [job(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                batches = list(pool.map(job, tasks))
        return sort_rows(row for batch in batches for row in batch)

    def run(self) -> ExperimentResult:
        config = self.config
        structured_log(
            logger,
            "info",
            "sweep started",
            phase="sweep",
            run_id=config.name,
            rows=expected_rows(config),
            workers=self.workers,
        )
        if config.mc.enabled:
            ground_truth_norm_check(
                config.build_ground_truth(),
                config.mc.norm_check_samples,
                derive_seed(0, "norm", config.name),
                batch_size=config.mc.batch_size,
            )

        rows = self.compute_rows()
        result = ExperimentResult(config=config, rows=rows)
        if self.write:
            result = self._write(result)
        structured_log(
            logger,
            "info",
            "sweep finished",
            phase="sweep",
            run_id=config.name,
            rows=len(rows),
            failed=len(result.failed_rows),
        )
        return result

    def _write(self, result: ExperimentResult) -> ExperimentResult:
        outputs = self.config.outputs
        directory = outputs.directory
        stem = Path(outputs.csv_name).stem
        csv_path = None
        if "csv" in outputs.formats:
            csv_path = write_csv(result.rows, directory / f"{self.config.name}_{outputs.csv_name}")
        failures = write_failures(result.rows, directory / f"{self.config.name}_{stem}_failures.jsonl")
        figures: list[Path] = []
        if "svg" in outputs.formats:
            figures = plot_results(result.rows, directory, self.config.name)
        return ExperimentResult(
            config=result.config,
            rows=result.rows,
            csv_path=csv_path,
            failures_path=failures,
            figures=figures,
        )


def run_experiment(config: ExperimentConfig, workers: int = 1, write: bool = True) -> ExperimentResult:
    """Run one sweep; see :class:`ExperimentRunner`."""
    return ExperimentRunner(config, workers=workers, write=write).run()
