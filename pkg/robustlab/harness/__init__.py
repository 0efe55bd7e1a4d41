"""Experiment harness: configuration, sweeps, result files, figures and acceptance."""

from robustlab.harness.acceptance import AcceptanceReport, SuiteSettings, verify_acceptance
from robustlab.harness.config import ExperimentConfig, RegimeSpec, load_config
from robustlab.harness.plotting import PlotSpec, render
from robustlab.harness.presets import get_preset
from robustlab.harness.results import ResultRow, read_csv, write_csv
from robustlab.harness.runner import ExperimentResult, ExperimentRunner, run_experiment

__all__ = [
    "ExperimentConfig",
    "RegimeSpec",
    "load_config",
    "get_preset",
    "ExperimentRunner",
    "ExperimentResult",
    "run_experiment",
    "ResultRow",
    "read_csv",
    "write_csv",
    "PlotSpec",
    "render",
    "AcceptanceReport",
    "SuiteSettings",
    "verify_acceptance",
]
