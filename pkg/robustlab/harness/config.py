"""YAML experiment configuration.

YAML Format:
    name: fig1-aligned
    d: 300
    m_grid: [150, 300, 600, 1200]     # or rho_grid: [0.5, 1.0, 2.0]
    activation: quadratic
    ground_truth:
      kind: rank_flat
      rank_fraction: 0.5
      normalization: frobenius
    covariance:
      kind: proportional_to_b         # isotropic | proportional_to_b | profile
    seeds: [0, 1, 2, 3, 4]
    regimes:
      - tag: RF
      - tag: RFL
        ridges: [1.0]
        init_seeds: 50                # a count expands to 0..49
    mc:
      enabled: true
      n_samples: 200000
    psi:
      method: finite-d-trace
      n_rep: 20
    outputs:
      directory: results
      formats: [csv, svg]

``ROBUSTLAB_OUTPUT_DIR`` overrides ``outputs.directory``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import yaml

from robustlab.exceptions import ConfigurationError
from robustlab.model import CovarianceDescriptor, GroundTruth, SpectrumProfile, make_ground_truth
from robustlab.theory import PsiMethod
from robustlab.types import Regime
from robustlab.utils.logging import get_logger

logger = get_logger(__name__)

OUTPUT_DIR_ENV = "ROBUSTLAB_OUTPUT_DIR"
MIN_DIMENSION = 10
OUTPUT_FORMATS = ("csv", "svg")
# λ used when a ridge-regime block lists no ridges
DEFAULT_RIDGES: dict[Regime, tuple[float, ...]] = {
    Regime.RF: (0.0,),
    Regime.RF_RIDGE: (0.1,),
    Regime.RFL: (0.0,),
}


class CovarianceKind(str, Enum):
    ISOTROPIC = "isotropic"
    PROPORTIONAL_TO_B = "proportional_to_b"
    PROFILE = "profile"


@dataclass(frozen=True)
class CovarianceSpec:
    """How Γ is built from the ground truth."""

    kind: CovarianceKind = CovarianceKind.ISOTROPIC
    profile: SpectrumProfile | None = None

    def build(self, ground_truth: GroundTruth) -> CovarianceDescriptor:
        if self.kind is CovarianceKind.ISOTROPIC:
            return CovarianceDescriptor.isotropic(ground_truth.dim)
        if self.kind is CovarianceKind.PROPORTIONAL_TO_B:
            return CovarianceDescriptor.proportional_to(ground_truth.b_matrix)
        if self.profile is None:
            raise ConfigurationError("covariance kind 'profile' needs a profile", key="covariance.profile")
        return CovarianceDescriptor.from_profile(self.profile, ground_truth.dim)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind.value}
        if self.profile is not None:
            data["profile"] = self.profile.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CovarianceSpec:
        profile = data.get("profile")
        return cls(
            kind=CovarianceKind(data.get("kind", "isotropic")),
            profile=SpectrumProfile.from_dict(profile) if profile else None,
        )


@dataclass(frozen=True)
class RegimeSpec:
    """One ``regimes:`` block: a regime tag with its ridge and init-seed lists."""

    regime: Regime
    ridges: tuple[float, ...] = ()
    init_seeds: tuple[int, ...] = (0,)

    def __post_init__(self) -> None:
        if not self.ridges:
            object.__setattr__(self, "ridges", DEFAULT_RIDGES.get(self.regime, ()))

    def row_keys(self) -> list[tuple[float | None, int | None]]:
        """(ridge, init seed) pairs this block expands to; NA where unused."""
        ridges: list[float | None] = list(self.ridges) if self.regime.uses_ridge else [None]
        seeds: list[int | None] = list(self.init_seeds) if self.regime.uses_init else [None]
        return [(ridge, seed) for ridge in ridges for seed in seeds]

    def to_dict(self) -> dict[str, Any]:
        return {
            "tag": self.regime.value,
            "ridges": list(self.ridges),
            "init_seeds": list(self.init_seeds),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RegimeSpec:
        regime = Regime.parse(str(data["tag"]))
        ridges = tuple(float(r) for r in data.get("ridges", ()))
        raw_seeds = data.get("init_seeds", [0])
        init_seeds = tuple(range(raw_seeds)) if isinstance(raw_seeds, int) else tuple(int(s) for s in raw_seeds)
        return cls(regime=regime, ridges=ridges, init_seeds=init_seeds)


@dataclass(frozen=True)
class MonteCarloSettings:
    """Empirical estimator settings."""

    enabled: bool = True
    n_samples: int = 200_000
    batch_size: int = 8192
    norm_check_samples: int = 20_000

    def to_dict(self) -> dict[str, Any]:
        return {
            "enabled": self.enabled,
            "n_samples": self.n_samples,
            "batch_size": self.batch_size,
            "norm_check_samples": self.norm_check_samples,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MonteCarloSettings:
        return cls(
            enabled=bool(data.get("enabled", True)),
            n_samples=int(data.get("n_samples", 200_000)),
            batch_size=int(data.get("batch_size", 8192)),
            norm_check_samples=int(data.get("norm_check_samples", 20_000)),
        )


@dataclass(frozen=True)
class PsiSettings:
    method: PsiMethod = PsiMethod.FINITE_D_TRACE
    n_rep: int = 20
    seed: int = 0
    tolerance: float = 1e-12

    def to_dict(self) -> dict[str, Any]:
        return {"method": self.method.value, "n_rep": self.n_rep, "seed": self.seed, "tolerance": self.tolerance}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PsiSettings:
        return cls(
            method=PsiMethod(data.get("method", PsiMethod.FINITE_D_TRACE.value)),
            n_rep=int(data.get("n_rep", 20)),
            seed=int(data.get("seed", 0)),
            tolerance=float(data.get("tolerance", 1e-12)),
        )


@dataclass(frozen=True)
class OutputSettings:
    directory: Path = Path("results")
    csv_name: str = "results.csv"
    formats: tuple[str, ...] = OUTPUT_FORMATS
    dump_population: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "directory": str(self.directory),
            "csv_name": self.csv_name,
            "formats": list(self.formats),
            "dump_population": self.dump_population,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> OutputSettings:
        return cls(
            directory=Path(data.get("directory", "results")),
            csv_name=str(data.get("csv_name", "results.csv")),
            formats=tuple(str(f) for f in data.get("formats", OUTPUT_FORMATS)),
            dump_population=bool(data.get("dump_population", False)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """A regime × width × seed sweep."""

    name: str
    dim: int
    regimes: tuple[RegimeSpec, ...]
    seeds: tuple[int, ...]
    ground_truth: SpectrumProfile
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)
    m_grid: tuple[int, ...] = ()
    rho_grid: tuple[float, ...] = ()
    activation: str = "quadratic"
    activation_shift: float | None = None
    mc: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    psi: PsiSettings = field(default_factory=PsiSettings)
    outputs: OutputSettings = field(default_factory=OutputSettings)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Raise ConfigurationError naming the offending key."""
        if self.dim < MIN_DIMENSION:
            raise ConfigurationError(f"d must be at least {MIN_DIMENSION}", key="d", value=self.dim)
        if not self.m_grid and not self.rho_grid:
            raise ConfigurationError("one of m_grid or rho_grid must be nonempty", key="m_grid")
        if any(m < 1 for m in self.widths()):
            raise ConfigurationError("widths must be positive", key="m_grid")
        if not self.seeds:
            raise ConfigurationError("seeds must be nonempty", key="seeds")
        if not self.regimes:
            raise ConfigurationError("at least one regime block is required", key="regimes")
        for spec in self.regimes:
            if any(ridge < 0.0 for ridge in spec.ridges):
                raise ConfigurationError("ridges must be nonnegative", key="regimes.ridges")
            if spec.regime is Regime.RF and any(ridge != 0.0 for ridge in spec.ridges):
                raise ConfigurationError(
                    "RF is unregularized; use RF_RIDGE for λ > 0",
                    key="regimes.ridges",
                    value=list(spec.ridges),
                )
            if spec.regime is Regime.RF_RIDGE and 0.0 in spec.ridges:
                raise ConfigurationError(
                    "RF_RIDGE needs λ > 0; use RF for λ = 0",
                    key="regimes.ridges",
                    value=list(spec.ridges),
                )
            if spec.regime.uses_init and not spec.init_seeds:
                raise ConfigurationError("init_seeds must be nonempty", key="regimes.init_seeds")
        unknown = set(self.outputs.formats) - set(OUTPUT_FORMATS)
        if unknown:
            raise ConfigurationError("unknown output format", key="outputs.formats", value=sorted(unknown))
        if self.mc.enabled and self.mc.n_samples < 2:
            raise ConfigurationError("mc.n_samples must be at least 2", key="mc.n_samples")
        if self.mc.batch_size < 1:
            raise ConfigurationError(
                "mc.batch_size must be positive", key="mc.batch_size", value=self.mc.batch_size
            )

    def widths(self) -> tuple[int, ...]:
        """m_grid, or round(ρ·d) for each ρ in rho_grid."""
        if self.m_grid:
            return self.m_grid
        return tuple(max(1, round(rho * self.dim)) for rho in self.rho_grid)

    def build_ground_truth(self) -> GroundTruth:
        return make_ground_truth(self.ground_truth, self.dim)

    def with_output_dir(self, directory: Path) -> ExperimentConfig:
        return replace(self, outputs=replace(self.outputs, directory=directory))

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "name": self.name,
            "d": self.dim,
            "activation": self.activation,
            "ground_truth": self.ground_truth.to_dict(),
            "covariance": self.covariance.to_dict(),
            "seeds": list(self.seeds),
            "regimes": [spec.to_dict() for spec in self.regimes],
            "mc": self.mc.to_dict(),
            "psi": self.psi.to_dict(),
            "outputs": self.outputs.to_dict(),
        }
        if self.m_grid:
            data["m_grid"] = list(self.m_grid)
        if self.rho_grid:
            data["rho_grid"] = list(self.rho_grid)
        if self.activation_shift is not None:
            data["activation_shift"] = self.activation_shift
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        try:
            return cls(
                name=str(data.get("name", "experiment")),
                dim=int(data["d"]),
                regimes=tuple(RegimeSpec.from_dict(block) for block in data.get("regimes", [])),
                seeds=tuple(int(s) for s in data.get("seeds", [0])),
                ground_truth=SpectrumProfile.from_dict(data.get("ground_truth", {})),
                covariance=CovarianceSpec.from_dict(data.get("covariance", {})),
                m_grid=tuple(int(m) for m in data.get("m_grid", [])),
                rho_grid=tuple(float(r) for r in data.get("rho_grid", [])),
                activation=str(data.get("activation", "quadratic")),
                activation_shift=data.get("activation_shift"),
                mc=MonteCarloSettings.from_dict(data.get("mc", {})),
                psi=PsiSettings.from_dict(data.get("psi", {})),
                outputs=OutputSettings.from_dict(data.get("outputs", {})),
            )
        except ConfigurationError:
            raise
        except KeyError as e:
            raise ConfigurationError(f"missing required key {e}", key=str(e.args[0])) from e
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"invalid configuration: {e}") from e


def apply_environment(config: ExperimentConfig) -> ExperimentConfig:
    """Apply ``ROBUSTLAB_OUTPUT_DIR`` when set."""
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        logger.info(f"Output directory overridden by {OUTPUT_DIR_ENV}: {override}")
        return config.with_output_dir(Path(override))
    return config


def load_config(path: Path) -> ExperimentConfig:
    """Load and validate an experiment configuration from YAML."""
    if not path.exists():
        raise ConfigurationError(f"Configuration not found: {path}", key="path")

    logger.info(f"Loading experiment configuration from {path}")
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"invalid YAML: {e}", key="path") from e

    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a YAML mapping", key="path")
    data.setdefault("name", path.stem)
    return apply_environment(ExperimentConfig.from_dict(data))


def dump_config(config: ExperimentConfig, path: Path) -> Path:
    """Write a configuration back to YAML (keys in a stable order)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)
    return path
