"""Tests for the sweep runner."""

from dataclasses import replace

import jsonlines
import pytest

from robustlab.audit import DEFAULT_BATCH, mc_mean
from robustlab.harness.config import (
    ExperimentConfig,
    MonteCarloSettings,
    OutputSettings,
    PsiSettings,
    RegimeSpec,
)
from robustlab.harness.presets import HALF_RANK_B
from robustlab.harness.results import read_csv
from robustlab.harness.runner import (
    EnsembleTask,
    ExperimentResult,
    expected_rows,
    plan_tasks,
    run_ensemble,
    run_experiment,
)
from robustlab.types import Regime


def _config(tmp_path, regimes=None, activation="quadratic", mc=None, name="tiny"):
    return ExperimentConfig(
        name=name,
        dim=10,
        regimes=regimes
        or (
            RegimeSpec(Regime.SGD_LIMIT),
            RegimeSpec(Regime.RF),
            RegimeSpec(Regime.INIT, init_seeds=(0, 1)),
            RegimeSpec(Regime.NT),
        ),
        seeds=(0, 1),
        ground_truth=HALF_RANK_B,
        m_grid=(5, 20),
        activation=activation,
        mc=mc or MonteCarloSettings(n_samples=2_000, batch_size=512, norm_check_samples=5_000),
        psi=PsiSettings(n_rep=2),
        outputs=OutputSettings(directory=tmp_path),
    )


def _timeless(rows):
    return [replace(row, wall_time_ms=0.0) for row in rows]


class TestPlanning:
    """Tests for task planning."""

    def test_tasks_cover_grid(self, tmp_path):
        """Test one task per (m, ensemble seed)."""
        tasks = plan_tasks(_config(tmp_path))

        assert tasks == [EnsembleTask(5, 0), EnsembleTask(5, 1), EnsembleTask(20, 0), EnsembleTask(20, 1)]

    def test_expected_rows(self, tmp_path):
        """Test the row count multiplies widths, seeds and per-block rows."""
        assert expected_rows(_config(tmp_path)) == 2 * 2 * (1 + 1 + 2 + 1)

    def test_ensemble_rows(self, tmp_path):
        """Test one ensemble yields one row per (regime, ridge, init seed)."""
        rows = run_ensemble(_config(tmp_path), EnsembleTask(5, 1))

        assert [(r.regime, r.init_seed) for r in rows] == [
            (Regime.SGD_LIMIT, None),
            (Regime.RF, None),
            (Regime.INIT, 0),
            (Regime.INIT, 1),
            (Regime.NT, None),
        ]
        assert all(r.m == 5 and r.ensemble_seed == 1 and r.d == 10 for r in rows)
        assert rows[1].ridge == 0.0
        assert rows[0].ridge is None

    def test_rows_carry_configured_tag(self, tmp_path):
        """Test each row is tagged with its block's regime whatever its λ."""
        regimes = (
            RegimeSpec(Regime.RF),
            RegimeSpec(Regime.RF_RIDGE, ridges=(0.1, 1.0)),
            RegimeSpec(Regime.RFL, ridges=(0.0, 1.0)),
        )
        config = _config(tmp_path, regimes=regimes, mc=MonteCarloSettings(enabled=False))
        rows = run_ensemble(config, EnsembleTask(5, 0))

        assert [(r.regime, r.ridge) for r in rows] == [
            (Regime.RF, 0.0),
            (Regime.RF_RIDGE, 0.1),
            (Regime.RF_RIDGE, 1.0),
            (Regime.RFL, 0.0),
            (Regime.RFL, 1.0),
        ]
        assert not any(r.failed for r in rows)


class TestRunExperiment:
    """Tests for full sweeps."""

    def test_rows_complete(self, tmp_path):
        """Test every row has exact, MC and theory values."""
        result = run_experiment(_config(tmp_path), write=False)

        assert len(result.rows) == expected_rows(result.config)
        assert result.exit_code == 0
        for row in result.rows:
            assert not row.failed
            assert row.egen_exact is not None and row.erob_exact is not None
            assert row.egen_mc is not None and row.egen_mc_se is not None
            assert row.experiment == "tiny"

    def test_exact_matches_monte_carlo(self, tmp_path):
        """Test exact values sit within 5 SE of the MC estimates."""
        result = run_experiment(_config(tmp_path), write=False)

        for row in result.rows:
            assert abs(row.egen_exact - row.egen_mc) <= 5.0 * row.egen_mc_se + 1e-12
            assert abs(row.erob_exact - row.erob_mc) <= 5.0 * row.erob_mc_se + 1e-12

    def test_deterministic(self, tmp_path):
        """Test two runs of one configuration give identical rows."""
        config = _config(tmp_path)

        first = run_experiment(config, write=False).rows
        second = run_experiment(config, write=False).rows
        assert _timeless(first) == _timeless(second)

    @pytest.mark.slow
    def test_workers_do_not_change_rows(self, tmp_path):
        """Test a process pool reproduces the serial rows."""
        config = _config(tmp_path)

        serial = run_experiment(config, workers=1, write=False).rows
        parallel = run_experiment(config, workers=2, write=False).rows
        assert _timeless(serial) == _timeless(parallel)

    def test_batch_size_reaches_estimator(self, tmp_path, monkeypatch):
        """Test mc.batch_size is used by every Monte-Carlo mean."""
        seen = []

        def recording(statistic, dim, n_samples, seed, batch_size=DEFAULT_BATCH):
            seen.append(batch_size)
            return mc_mean(statistic, dim, n_samples, seed, batch_size)

        monkeypatch.setattr("robustlab.regimes.mc_mean", recording)
        monkeypatch.setattr("robustlab.audit.mc_mean", recording)
        mc = MonteCarloSettings(n_samples=600, batch_size=256, norm_check_samples=600)
        run_experiment(_config(tmp_path, regimes=(RegimeSpec(Regime.RF),), mc=mc), write=False)

        # norm check, then egen and erob for each of the 4 rows
        assert seen == [256] * 9

    def test_mc_disabled(self, tmp_path):
        """Test MC columns stay empty when estimation is off."""
        result = run_experiment(_config(tmp_path, mc=MonteCarloSettings(enabled=False)), write=False)

        assert all(row.egen_mc is None and row.erob_mc_se is None for row in result.rows)

    def test_outputs_written(self, tmp_path):
        """Test the CSV and figure are written, no sidecar without failures."""
        result = run_experiment(_config(tmp_path))

        assert result.csv_path == tmp_path / "tiny_results.csv"
        assert result.failures_path is None
        assert _timeless(read_csv(result.csv_path)) == _timeless(result.rows)
        assert [path.name for path in result.figures] == ["tiny.svg"]
        assert result.figures[0].read_text().lstrip().startswith("<?xml")


class TestRowFailures:
    """Tests for per-row failure capture."""

    def test_unsupported_activation_rows(self, tmp_path):
        """Test NT rows fail under ReLU while RF rows still succeed."""
        regimes = (RegimeSpec(Regime.RF), RegimeSpec(Regime.NT))
        config = _config(tmp_path, regimes=regimes, activation="relu", mc=MonteCarloSettings(enabled=False))
        result = run_experiment(config)

        failed = result.failed_rows
        assert {row.regime for row in failed} == {Regime.NT}
        assert all("UnsupportedActivationError" in row.error for row in failed)
        assert all(not row.failed for row in result.rows if row.regime is Regime.RF)
        assert result.failure_ratio == pytest.approx(0.5)
        assert result.exit_code == 1

        with jsonlines.open(result.failures_path) as reader:
            records = list(reader)
        assert len(records) == len(failed)

    def test_exit_code_threshold(self, tmp_path):
        """Test up to 10% failed rows still exits 0."""
        config = _config(tmp_path, mc=MonteCarloSettings(enabled=False))
        rows = run_experiment(config, write=False).rows
        broken = [replace(rows[0], error="ValueError: synthetic")] + rows[1:]

        ratio = 1 / len(rows)
        assert ratio <= 0.10
        assert ExperimentResult(config=config, rows=broken).exit_code == 0
        assert ExperimentResult(config=config, rows=[]).exit_code == 0
