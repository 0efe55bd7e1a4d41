"""robustlab: generalization against robustness for two-layer networks.

The lab evaluates how well random-features, neural-tangent and fully trained
two-layer networks fit a quadratic target f⋆(x) = xᵀBx + b₀ on Gaussian inputs,
and how robust the fitted predictors are, measured by their Dirichlet energy
E‖∇f(x)‖².

Quick Start:
    >>> from robustlab import CovarianceDescriptor, get_activation, make_ground_truth
    >>> from robustlab import SpectrumProfile, fit_rf, sample_ensemble
    >>> from robustlab.model import Normalization
    >>>
    >>> gt = make_ground_truth(SpectrumProfile(normalization=Normalization.FROBENIUS), 50)
    >>> ensemble = sample_ensemble(CovarianceDescriptor.isotropic(50), 100, seed=0)
    >>> result = fit_rf(ensemble, get_activation("quadratic"), gt)
    >>> result.regime.value, 0.0 <= result.egen <= 1.0
    ('RF', True)

CLI Usage:
    $ robustlab run smoke
    $ robustlab verify quick
    $ robustlab plot results/ fig2.yaml
"""

__version__ = "0.1.0"

from robustlab.activation import ActivationProfile, ScaleConstants, get_activation, scale_constants
from robustlab.audit import (
    AuditReport,
    MonteCarloEstimate,
    Predictor,
    adversarial_increment,
    dirichlet_energy,
    increment_derivative_check,
    run_audit,
    universal_perturbation,
)
from robustlab.exceptions import (
    ConfigurationError,
    DegenerateActivationError,
    InvalidInputError,
    IterationLimitError,
    NotApplicableError,
    NotPositiveSemidefiniteError,
    NumericalFailureError,
    RobustLabError,
    UndefinedAlignmentError,
    UnsupportedActivationError,
)
from robustlab.harness.acceptance import AcceptanceReport, verify_acceptance
from robustlab.harness.config import ExperimentConfig, load_config
from robustlab.harness.runner import ExperimentResult, run_experiment
from robustlab.model import (
    CovarianceDescriptor,
    GroundTruth,
    NeuronEnsemble,
    SpectrumProfile,
    make_ground_truth,
    sample_ensemble,
)
from robustlab.population import PopulationMatrices, population_matrices, ridge_resolvent
from robustlab.regimes import (
    RegimeEvaluation,
    eval_init,
    eval_sgd_limit,
    fit_nt,
    fit_ntl,
    fit_rf,
    fit_rfl,
)
from robustlab.theory import PsiPair, TheoryInputs, predict, psi_estimate, psi_silverstein
from robustlab.types import Regime

__all__ = [
    "__version__",
    # Model
    "GroundTruth",
    "SpectrumProfile",
    "CovarianceDescriptor",
    "NeuronEnsemble",
    "make_ground_truth",
    "sample_ensemble",
    # Activation and population
    "ActivationProfile",
    "ScaleConstants",
    "get_activation",
    "scale_constants",
    "PopulationMatrices",
    "population_matrices",
    "ridge_resolvent",
    # Regimes and theory
    "Regime",
    "RegimeEvaluation",
    "eval_sgd_limit",
    "fit_rf",
    "fit_rfl",
    "eval_init",
    "fit_nt",
    "fit_ntl",
    "PsiPair",
    "TheoryInputs",
    "predict",
    "psi_estimate",
    "psi_silverstein",
    # Robustness audit
    "Predictor",
    "MonteCarloEstimate",
    "AuditReport",
    "dirichlet_energy",
    "adversarial_increment",
    "increment_derivative_check",
    "universal_perturbation",
    "run_audit",
    # Harness
    "ExperimentConfig",
    "ExperimentResult",
    "AcceptanceReport",
    "load_config",
    "run_experiment",
    "verify_acceptance",
    # Exceptions
    "RobustLabError",
    "ConfigurationError",
    "InvalidInputError",
    "NotPositiveSemidefiniteError",
    "UndefinedAlignmentError",
    "NumericalFailureError",
    "IterationLimitError",
    "DegenerateActivationError",
    "UnsupportedActivationError",
    "NotApplicableError",
]
