"""Named experiment presets.

Each preset is a list of configurations run back to back:

- ``fig1``: RF (and the SGD limit) for Γ ∝ B and Γ = I/d at d = 300,
- ``fig2``: INIT, NT and lazy NT with small (B = I/√d) and large (B = I/d) init,
- ``full``: both figures at d = 450,
- ``smoke``: a seconds-long run over every regime at d = 20.
"""

from __future__ import annotations

from collections.abc import Callable

from robustlab.exceptions import ConfigurationError
from robustlab.harness.config import (
    CovarianceKind,
    CovarianceSpec,
    ExperimentConfig,
    MonteCarloSettings,
    RegimeSpec,
)
from robustlab.model import Normalization, SpectrumKind, SpectrumProfile
from robustlab.types import Regime

HALF_RANK_B = SpectrumProfile(
    kind=SpectrumKind.RANK_FLAT, rank_fraction=0.5, normalization=Normalization.FROBENIUS
)
SMALL_INIT_B = SpectrumProfile(kind=SpectrumKind.IDENTITY, normalization=Normalization.FROBENIUS)
LARGE_INIT_B = SpectrumProfile(kind=SpectrumKind.IDENTITY, normalization=Normalization.TRACE)

ALIGNED = CovarianceSpec(kind=CovarianceKind.PROPORTIONAL_TO_B)
ISOTROPIC = CovarianceSpec(kind=CovarianceKind.ISOTROPIC)


def fig1(dim: int = 300, seeds: int = 5) -> list[ExperimentConfig]:
    """RF generalization and robustness against width, aligned and isotropic Γ."""
    widths = tuple(int(dim * rho) for rho in (0.5, 1, 2, 4, 8))
    regimes = (RegimeSpec(Regime.RF), RegimeSpec(Regime.SGD_LIMIT))
    return [
        ExperimentConfig(
            name=f"fig1-{label}-d{dim}",
            dim=dim,
            regimes=regimes,
            seeds=tuple(range(seeds)),
            ground_truth=HALF_RANK_B,
            covariance=covariance,
            m_grid=widths,
            mc=MonteCarloSettings(n_samples=50_000),
        )
        for label, covariance in (("aligned", ALIGNED), ("isotropic", ISOTROPIC))
    ]


def fig2(dim: int = 300, seeds: int = 5, init_seeds: int = 5) -> list[ExperimentConfig]:
    """The four panels: INIT, NT, lazy NT with small init, lazy NT with large init."""
    rho_grid = (0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)
    init = tuple(range(init_seeds))
    panels = (
        ("init", SMALL_INIT_B, RegimeSpec(Regime.INIT, init_seeds=init)),
        ("nt", SMALL_INIT_B, RegimeSpec(Regime.NT)),
        ("ntl-small", SMALL_INIT_B, RegimeSpec(Regime.NTL, init_seeds=init)),
        ("ntl-large", LARGE_INIT_B, RegimeSpec(Regime.NTL, init_seeds=init)),
    )
    return [
        ExperimentConfig(
            name=f"fig2-{label}-d{dim}",
            dim=dim,
            regimes=(spec,),
            seeds=tuple(range(seeds)),
            ground_truth=truth,
            covariance=ISOTROPIC,
            rho_grid=rho_grid,
        )
        for label, truth, spec in panels
    ]


def full() -> list[ExperimentConfig]:
    return fig1(dim=450) + fig2(dim=450)


def smoke() -> list[ExperimentConfig]:
    """Every regime at d = 20 with a small Monte-Carlo budget."""
    regimes = (
        RegimeSpec(Regime.SGD_LIMIT),
        RegimeSpec(Regime.RF),
        RegimeSpec(Regime.RF_RIDGE, ridges=(0.1, 1.0)),
        RegimeSpec(Regime.RFL, ridges=(1.0,), init_seeds=(0, 1)),
        RegimeSpec(Regime.INIT, init_seeds=(0, 1)),
        RegimeSpec(Regime.NT),
        RegimeSpec(Regime.NTL, init_seeds=(0, 1)),
    )
    return [
        ExperimentConfig(
            name="smoke",
            dim=20,
            regimes=regimes,
            seeds=(0, 1),
            ground_truth=HALF_RANK_B,
            covariance=ISOTROPIC,
            m_grid=(10, 40),
            mc=MonteCarloSettings(n_samples=20_000, norm_check_samples=20_000),
        )
    ]


PRESETS: dict[str, Callable[[], list[ExperimentConfig]]] = {
    "fig1": fig1,
    "fig2": fig2,
    "full": full,
    "smoke": smoke,
}

PRESET_DESCRIPTIONS: dict[str, str] = {
    "fig1": "RF and SGD limit vs width, Γ ∝ B and Γ = I/d (d=300)",
    "fig2": "INIT / NT / lazy NT small and large init vs ρ (d=300)",
    "full": "fig1 and fig2 at d=450",
    "smoke": "all regimes at d=20, seconds",
}


def get_preset(name: str) -> list[ExperimentConfig]:
    """Configurations of a named preset."""
    key = name.strip().lower()
    if key not in PRESETS:
        valid = ", ".join(sorted(PRESETS))
        raise ConfigurationError(f"Unknown preset '{name}'. Valid options: {valid}", key="preset")
    return PRESETS[key]()
