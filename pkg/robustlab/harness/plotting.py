"""SVG figures of sweep results.

Solid curves are exact values averaged over seeds with a min–max band; dashed
curves are theory predictions. Output is deterministic: fixed SVG hash salt
and no date metadata.

Plot spec YAML:
    title: Figure 2
    x: rho                       # m | rho
    output: fig2.svg
    panels:
      - title: (a) INIT
        experiment: fig2-init-d300   # optional filter on the experiment name
        regimes: [INIT]
      - title: (b) NT
        regimes: [NT]
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import yaml  # noqa: E402

from robustlab.exceptions import ConfigurationError  # noqa: E402
from robustlab.harness.results import ResultRow  # noqa: E402
from robustlab.types import Regime  # noqa: E402
from robustlab.utils.logging import get_logger  # noqa: E402

logger = get_logger(__name__)

SVG_METADATA: dict[str, Any] = {"Date": None, "Creator": "robustlab"}
METRICS = (("egen", "generalization error"), ("erob", "robustness (Dirichlet energy)"))
X_AXES = ("m", "rho")

plt.rcParams["svg.hashsalt"] = "robustlab"


@dataclass(frozen=True)
class PanelSpec:
    title: str
    regimes: tuple[Regime, ...] = ()
    experiment: str | None = None

    def select(self, rows: Sequence[ResultRow]) -> list[ResultRow]:
        return [
            row
            for row in rows
            if not row.failed
            and row.egen_exact is not None
            and row.erob_exact is not None
            and (not self.regimes or row.regime in self.regimes)
            and (self.experiment is None or row.experiment in ("", self.experiment))
        ]


@dataclass(frozen=True)
class PlotSpec:
    """Figure layout: one column per panel, egen on top and erob below."""

    title: str
    panels: tuple[PanelSpec, ...]
    x: str = "m"
    output: str = "figure.svg"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PlotSpec:
        x_axis = str(data.get("x", "m"))
        if x_axis not in X_AXES:
            raise ConfigurationError(f"x must be one of {', '.join(X_AXES)}", key="x", value=x_axis)
        try:
            panels = tuple(
                PanelSpec(
                    title=str(panel.get("title", "")),
                    regimes=tuple(Regime.parse(tag) for tag in panel.get("regimes", [])),
                    experiment=panel.get("experiment"),
                )
                for panel in data.get("panels", [{}])
            )
        except ValueError as e:
            raise ConfigurationError(str(e), key="panels") from e
        return cls(
            title=str(data.get("title", "")),
            panels=panels,
            x=x_axis,
            output=str(data.get("output", "figure.svg")),
        )


def load_plot_spec(path: Path) -> PlotSpec:
    if not path.exists():
        raise ConfigurationError(f"Plot spec not found: {path}", key="spec")
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigurationError("plot spec must be a YAML mapping", key="spec")
    return PlotSpec.from_dict(data)


@dataclass
class Curve:
    """Aggregated values of one (regime, ridge) series."""

    label: str
    x: list[float] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)
    low: list[float] = field(default_factory=list)
    high: list[float] = field(default_factory=list)
    theory: list[float] = field(default_factory=list)


def _label(regime: Regime, ridge: float | None) -> str:
    return regime.value if ridge is None or regime is Regime.RF else f"{regime.value} λ={ridge:g}"


def aggregate(rows: Sequence[ResultRow], metric: str, x_axis: str = "m") -> list[Curve]:
    """Group rows into curves, averaging over ensemble and init seeds."""
    groups: dict[tuple[int, float, float], list[ResultRow]] = defaultdict(list)
    labels: dict[tuple[int, float], str] = {}
    for row in rows:
        ridge = -1.0 if row.ridge is None else row.ridge
        x_value = float(row.m if x_axis == "m" else row.rho)
        groups[(row.regime.order, ridge, x_value)].append(row)
        labels[(row.regime.order, ridge)] = _label(row.regime, row.ridge)

    curves: dict[tuple[int, float], Curve] = {}
    for (order, ridge, x_value), members in sorted(groups.items()):
        curve = curves.setdefault((order, ridge), Curve(label=labels[(order, ridge)]))
        exact = np.array([getattr(r, f"{metric}_exact") for r in members], dtype=np.float64)
        theory = [getattr(r, f"{metric}_theory") for r in members]
        curve.x.append(x_value)
        curve.mean.append(float(exact.mean()))
        curve.low.append(float(exact.min()))
        curve.high.append(float(exact.max()))
        known = [t for t in theory if t is not None]
        curve.theory.append(float(np.mean(known)) if known else float("nan"))
    return list(curves.values())


def _draw_panel(axis: Any, rows: Sequence[ResultRow], metric: str, x_axis: str, title: str) -> None:
    colors = plt.get_cmap("tab10")
    for index, curve in enumerate(aggregate(rows, metric, x_axis)):
        color = colors(index % 10)
        marker = "o" if len(curve.x) == 1 else None
        axis.plot(curve.x, curve.mean, "-", color=color, marker=marker, label=curve.label)
        axis.fill_between(curve.x, curve.low, curve.high, color=color, alpha=0.2, linewidth=0)
        if not np.all(np.isnan(curve.theory)):
            axis.plot(curve.x, curve.theory, "--", color=color, marker=marker, label=f"{curve.label} (theory)")
    axis.set_title(title)
    axis.set_xlabel("m" if x_axis == "m" else "ρ = m/d")
    axis.set_ylabel(dict(METRICS)[metric])
    axis.legend(loc="best", fontsize="small")


def _save(fig: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def render(rows: Sequence[ResultRow], spec: PlotSpec, directory: Path) -> Path | None:
    """Draw ``spec`` from ``rows``; None (with a warning) when nothing is selected."""
    selections = [panel.select(rows) for panel in spec.panels]
    if not any(selections):
        logger.warning(f"No rows selected for plot '{spec.title}', nothing written")
        return None

    columns = len(spec.panels)
    fig, axes = plt.subplots(
        len(METRICS), columns, figsize=(4.5 * columns, 7.0), squeeze=False
    )
    for column, (panel, selected) in enumerate(zip(spec.panels, selections, strict=True)):
        for row_index, (metric, _) in enumerate(METRICS):
            _draw_panel(axes[row_index][column], selected, metric, spec.x, panel.title)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return _save(fig, directory / spec.output)


def plot_results(rows: Sequence[ResultRow], directory: Path, name: str, x_axis: str = "m") -> list[Path]:
    """One figure for a sweep: egen and erob against width, all regimes."""
    spec = PlotSpec(title=name, panels=(PanelSpec(title=name),), x=x_axis, output=f"{name}.svg")
    path = render(rows, spec, directory)
    return [path] if path else []


def figure2_spec(dim: int = 300) -> PlotSpec:
    """Four-panel layout: INIT, NT, lazy NT small init, lazy NT large init."""
    return PlotSpec(
        title="Learning regimes",
        x="rho",
        output="fig2.svg",
        panels=(
            PanelSpec("(a) INIT", (Regime.INIT,), f"fig2-init-d{dim}"),
            PanelSpec("(b) NT", (Regime.NT,), f"fig2-nt-d{dim}"),
            PanelSpec("(c) NTL, small init", (Regime.NTL,), f"fig2-ntl-small-d{dim}"),
            PanelSpec("(d) NTL, large init", (Regime.NTL,), f"fig2-ntl-large-d{dim}"),
        ),
    )
