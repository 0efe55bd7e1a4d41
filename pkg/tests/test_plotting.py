"""Tests for figure rendering."""

import pytest
import yaml

from robustlab.exceptions import ConfigurationError
from robustlab.harness.plotting import (
    PanelSpec,
    PlotSpec,
    aggregate,
    figure2_spec,
    load_plot_spec,
    plot_results,
    render,
)
from robustlab.harness.results import ResultRow
from robustlab.types import Regime


def _row(regime, m, seed, egen, erob, ridge=None, theory=None, experiment="exp"):
    return ResultRow(
        regime=regime,
        d=10,
        m=m,
        rho=m / 10,
        ridge=ridge,
        ensemble_seed=seed,
        init_seed=None,
        egen_exact=egen,
        erob_exact=erob,
        egen_theory=theory,
        erob_theory=None if theory is None else 1.0 - theory,
        experiment=experiment,
    )


@pytest.fixture
def rows():
    return [
        _row(Regime.RF, 5, 0, 0.6, 0.4, ridge=0.0, theory=0.55),
        _row(Regime.RF, 5, 1, 0.5, 0.5, ridge=0.0, theory=0.55),
        _row(Regime.RF, 20, 0, 0.3, 0.7, ridge=0.0, theory=0.3),
        _row(Regime.NT, 5, 0, 0.5, 0.5),
        _row(Regime.NT, 20, 0, 0.0, 1.0, experiment="other"),
    ]


class TestAggregate:
    """Tests for curve aggregation."""

    def test_mean_and_band(self, rows):
        """Test seeds average into one point with a min/max band."""
        rf, nt = aggregate(rows, "egen")

        assert rf.label == "RF"
        assert rf.x == [5.0, 20.0]
        assert rf.mean == pytest.approx([0.55, 0.3])
        assert rf.low == pytest.approx([0.5, 0.3])
        assert rf.high == pytest.approx([0.6, 0.3])
        assert rf.theory == pytest.approx([0.55, 0.3])
        assert nt.label == "NT"

    def test_rho_axis(self, rows):
        """Test the ρ axis uses m/d."""
        curves = aggregate(rows, "erob", x_axis="rho")

        assert curves[0].x == [0.5, 2.0]

    def test_ridge_labels(self):
        """Test ridge curves carry λ in their label."""
        (curve,) = aggregate([_row(Regime.RF_RIDGE, 5, 0, 0.6, 0.4, ridge=0.1)], "egen")

        assert curve.label == "RF_RIDGE λ=0.1"


class TestRender:
    """Tests for SVG output."""

    def test_writes_svg(self, tmp_path, rows):
        """Test a figure is written for selected rows."""
        spec = PlotSpec(title="t", panels=(PanelSpec("all"),), output="all.svg")
        path = render(rows, spec, tmp_path)

        assert path == tmp_path / "all.svg"
        assert "<svg" in path.read_text()

    def test_deterministic_bytes(self, tmp_path, rows):
        """Test rendering twice gives identical files."""
        spec = PlotSpec(title="t", panels=(PanelSpec("all"),), output="a.svg")
        first = render(rows, spec, tmp_path / "one").read_bytes()
        second = render(rows, spec, tmp_path / "two").read_bytes()

        assert first == second

    def test_empty_selection(self, tmp_path, rows):
        """Test nothing is written when no row matches."""
        spec = PlotSpec(title="t", panels=(PanelSpec("init", (Regime.INIT,)),), output="none.svg")

        assert render(rows, spec, tmp_path) is None
        assert not (tmp_path / "none.svg").exists()

    def test_failed_rows_skipped(self, rows):
        """Test panels drop failed rows and other experiments."""
        failed = ResultRow(regime=Regime.NT, d=10, m=5, rho=0.5, ridge=None, ensemble_seed=1, init_seed=None, error="x")
        panel = PanelSpec("nt", (Regime.NT,), "exp")

        assert panel.select([*rows, failed]) == [rows[3]]

    def test_single_point(self, tmp_path):
        """Test a one-point curve still renders."""
        path = render(
            [_row(Regime.INIT, 5, 0, 2.1, 1.1)], PlotSpec(title="", panels=(PanelSpec("p"),)), tmp_path
        )

        assert path is not None and path.exists()

    def test_plot_results(self, tmp_path, rows):
        """Test the sweep figure is named after the experiment."""
        (path,) = plot_results(rows, tmp_path, "sweep")

        assert path.name == "sweep.svg"
        assert plot_results([], tmp_path, "empty") == []

    def test_four_panel_layout(self, tmp_path):
        """Test the learning-regime layout renders four panels."""
        spec = figure2_spec(dim=10)
        rows = [
            _row(Regime.INIT, 5, 0, 2.1, 1.1, experiment="fig2-init-d10"),
            _row(Regime.NT, 5, 0, 0.5, 0.5, experiment="fig2-nt-d10"),
            _row(Regime.NTL, 5, 0, 0.5, 0.6, experiment="fig2-ntl-small-d10"),
            _row(Regime.NTL, 5, 0, 0.5, 2.0, experiment="fig2-ntl-large-d10"),
        ]

        assert len(spec.panels) == 4
        assert render(rows, spec, tmp_path) == tmp_path / "fig2.svg"


class TestPlotSpec:
    """Tests for plot spec files."""

    def test_load(self, tmp_path):
        """Test a YAML spec loads panels and axis."""
        path = tmp_path / "spec.yaml"
        path.write_text(
            yaml.safe_dump(
                {"title": "RF", "x": "rho", "output": "rf.svg", "panels": [{"title": "a", "regimes": ["rf", "SGD_LIMIT"]}]}
            )
        )
        spec = load_plot_spec(path)

        assert spec.x == "rho"
        assert spec.panels[0].regimes == (Regime.RF, Regime.SGD_LIMIT)

    def test_default_panel(self):
        """Test an empty spec draws every regime in one panel."""
        spec = PlotSpec.from_dict({})

        assert spec.panels == (PanelSpec(title=""),)
        assert spec.x == "m"

    def test_bad_axis(self):
        """Test only m and rho are accepted as x."""
        with pytest.raises(ConfigurationError):
            PlotSpec.from_dict({"x": "lambda"})

    def test_bad_regime(self):
        """Test unknown regime tags are rejected."""
        with pytest.raises(ConfigurationError):
            PlotSpec.from_dict({"panels": [{"regimes": ["XYZ"]}]})

    def test_missing_file(self, tmp_path):
        """Test a missing spec file raises."""
        with pytest.raises(ConfigurationError):
            load_plot_spec(tmp_path / "absent.yaml")
