"""Tests for the command line."""

import json

import jsonlines
import pytest
import yaml
from typer.testing import CliRunner

from robustlab import __version__
from robustlab.cli import app

runner = CliRunner()


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "d": 10,
                "m_grid": [5, 20],
                "seeds": [0],
                "ground_truth": {"kind": "identity", "normalization": "frobenius"},
                "regimes": [{"tag": "RF"}, {"tag": "NT"}],
                "mc": {"enabled": False},
            }
        )
    )
    return path


class TestCli:
    """Tests for CLI commands and exit codes."""

    def test_version(self):
        """Test --version prints and exits 0."""
        result = runner.invoke(app, ["--version"])

        assert result.exit_code == 0
        assert __version__ in result.stdout

    def test_presets(self):
        """Test presets lists the named presets and suites."""
        result = runner.invoke(app, ["presets"])

        assert result.exit_code == 0
        for name in ("fig1", "fig2", "full", "smoke", "quick"):
            assert name in result.stdout

    def test_run_config(self, tmp_path, tiny_config):
        """Test run writes the CSV and JSON summary."""
        out = tmp_path / "out"
        summary = tmp_path / "summary.json"
        result = runner.invoke(app, ["run", str(tiny_config), "-o", str(out), "--json", str(summary)])

        assert result.exit_code == 0
        assert (out / "tiny_results.csv").exists()
        assert (out / "tiny.svg").exists()
        data = json.loads(summary.read_text())
        assert data["command"] == "run"
        assert data["summary"]["rows"] == 4
        assert data["summary"]["failed_rows"] == 0

    def test_run_row_failures_exit_one(self, tmp_path):
        """Test run exits 1 when more than 10% of rows fail."""
        path = tmp_path / "relu.yaml"
        path.write_text(
            yaml.safe_dump(
                {
                    "d": 10,
                    "m_grid": [5],
                    "seeds": [0],
                    "activation": "relu",
                    "regimes": [{"tag": "NT"}],
                    "mc": {"enabled": False},
                }
            )
        )
        result = runner.invoke(app, ["run", str(path), "-o", str(tmp_path / "out")])

        assert result.exit_code == 1
        assert (tmp_path / "out" / "relu_results_failures.jsonl").exists()

    def test_run_invalid_config(self, tmp_path):
        """Test an invalid configuration exits 2."""
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({"d": 5, "m_grid": [2], "regimes": [{"tag": "RF"}]}))
        result = runner.invoke(app, ["run", str(path)])

        assert result.exit_code == 2

    def test_run_unknown_preset(self):
        """Test an unknown preset exits 2."""
        result = runner.invoke(app, ["run", "nonexistent-preset"])

        assert result.exit_code == 2

    def test_run_env_output_dir(self, tmp_path, tiny_config, monkeypatch):
        """Test ROBUSTLAB_OUTPUT_DIR redirects outputs."""
        monkeypatch.setenv("ROBUSTLAB_OUTPUT_DIR", str(tmp_path / "env"))
        result = runner.invoke(app, ["run", str(tiny_config)])

        assert result.exit_code == 0
        assert (tmp_path / "env" / "tiny_results.csv").exists()

    def test_verify_single_criterion(self, tmp_path):
        """Test verify runs a subset and writes the report."""
        report = tmp_path / "report.jsonl"
        result = runner.invoke(app, ["verify", "-c", "2", "--report", str(report)])

        assert result.exit_code == 0
        with jsonlines.open(report) as reader:
            records = list(reader)
        assert records[0]["criterion"] == 2
        assert records[0]["passed"] is True
        assert records[-1]["summary"] is True

    def test_verify_negative_control(self):
        """Test a zero tolerance makes the identity check fail."""
        result = runner.invoke(app, ["verify", "-c", "2", "--tolerance-scale", "0"])

        assert result.exit_code == 1

    @pytest.mark.parametrize("criteria", ["abc", "99"])
    def test_verify_bad_criteria(self, criteria):
        """Test malformed or unknown criteria exit 2."""
        result = runner.invoke(app, ["verify", "-c", criteria])

        assert result.exit_code == 2

    def test_verify_unknown_suite(self):
        """Test an unknown suite exits 2."""
        result = runner.invoke(app, ["verify", "nightly", "-c", "2"])

        assert result.exit_code == 2

    def test_plot(self, tmp_path, tiny_config):
        """Test plot draws a figure from a run's CSV."""
        out = tmp_path / "out"
        assert runner.invoke(app, ["run", str(tiny_config), "-o", str(out)]).exit_code == 0
        spec = tmp_path / "spec.yaml"
        spec.write_text(yaml.safe_dump({"title": "RF", "panels": [{"regimes": ["RF"]}], "output": "rf.svg"}))

        result = runner.invoke(app, ["plot", str(out / "tiny_results.csv"), str(spec), "-o", str(tmp_path / "figs")])

        assert result.exit_code == 0
        assert (tmp_path / "figs" / "rf.svg").exists()

    def test_plot_directory_without_csv(self, tmp_path):
        """Test plotting an empty directory exits 2."""
        spec = tmp_path / "spec.yaml"
        spec.write_text(yaml.safe_dump({}))
        empty = tmp_path / "empty"
        empty.mkdir()

        result = runner.invoke(app, ["plot", str(empty), str(spec)])

        assert result.exit_code == 2
