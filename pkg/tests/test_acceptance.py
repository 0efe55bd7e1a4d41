"""Tests for the acceptance suite and its negative controls."""

import jsonlines
import pytest

from robustlab.exceptions import ConfigurationError, NumericalFailureError
from robustlab.harness.acceptance import (
    CRITERIA,
    SUITES,
    AcceptanceReport,
    Criterion,
    CriterionResult,
    get_suite,
    run_criterion,
    verify_acceptance,
)


class TestSuites:
    """Tests for suite lookup and overrides."""

    def test_twelve_criteria_registered(self):
        """Test every criterion number has a check."""
        assert sorted(CRITERIA) == list(range(1, 13))
        assert SUITES["default"].criteria == tuple(range(1, 13))

    def test_full_suite_dimension(self):
        """Test the full suite reruns RF and NT at d = 450."""
        suite = get_suite("full")

        assert suite.criteria == (3, 4, 8, 9)
        assert suite.rf_dim == suite.nt_dim == 450

    def test_overrides(self):
        """Test hooks replace suite fields."""
        suite = get_suite("Quick", zero_theory=True, tolerance_scale=0.5)

        assert suite.name == "quick"
        assert suite.theory(0.7) == 0.0
        assert suite.tol(0.05) == pytest.approx(0.025)

    def test_unknown_suite(self):
        """Test unknown suites list the valid options."""
        with pytest.raises(ConfigurationError, match="Valid options"):
            get_suite("nightly")

    def test_unknown_override(self):
        """Test a misspelled override is a configuration error."""
        with pytest.raises(ConfigurationError):
            get_suite("quick", tolerence_scale=2.0)

    def test_unknown_criteria(self):
        """Test criteria outside 1..12 are rejected before running."""
        with pytest.raises(ConfigurationError):
            verify_acceptance("quick", criteria=(2, 13))


class TestCriteria:
    """Tests for individual checks and their negative controls."""

    def test_sgd_identity_passes(self):
        """Test the SGD and RF identities hold."""
        report = verify_acceptance("default", criteria=(2,))

        assert report.passed
        assert report.exit_code == 0
        (result,) = report.results
        assert result.measured["worst_residual"] < 1e-12
        assert result.measured["symbolic_residual"] == "0"

    def test_zero_tolerance_fails_identity(self):
        """Test a zero tolerance scale makes the identity check fail."""
        report = verify_acceptance("default", criteria=(2,), tolerance_scale=0.0)

        assert not report.passed
        assert [r.number for r in report.failed] == [2]
        assert report.exit_code == 1

    def test_init_theory_values(self):
        """Test the INIT check compares against 2 + 1/d and 1 + 1/d."""
        (result,) = verify_acceptance("quick", criteria=(7,)).results

        assert result.measured["egen_theory"] == pytest.approx(2.0 + 1.0 / 60)
        assert result.measured["erob_theory"] == pytest.approx(1.0 + 1.0 / 60)

    def test_init_zero_tolerance_fails(self):
        """Test the INIT check is sensitive to its tolerance."""
        assert not verify_acceptance("quick", criteria=(7,), tolerance_scale=0.0).passed

    def test_init_zero_theory_fails(self):
        """Test replacing theory by 0 makes the INIT check fail."""
        assert not verify_acceptance("quick", criteria=(7,), zero_theory=True).passed

    def test_audit(self):
        """Test the increment check and universal direction in the quick suite."""
        (result,) = verify_acceptance("quick", criteria=(11,)).results

        assert result.passed, result.measured
        assert result.measured["cosine"] >= 0.99

    @pytest.mark.slow
    def test_rf_theory_zero_theory_fails(self):
        """Test the RF theory check detects a zeroed prediction."""
        report = verify_acceptance("quick", criteria=(3,), zero_theory=True)

        assert not report.passed
        assert report.results[0].measured["worst_gap"] > 0.05

    @pytest.mark.slow
    def test_init_formulas(self):
        """Test INIT means match the closed forms at the documented sizes."""
        (result,) = verify_acceptance("default", criteria=(7,)).results

        assert result.passed, result.measured

    @pytest.mark.slow
    def test_quick_nt_curves(self):
        """Test the NT and lazy NT checks pass at quick sizes."""
        report = verify_acceptance("quick", criteria=(8, 9))

        assert report.passed, [r.to_dict() for r in report.failed]

    @pytest.mark.slow
    def test_cross_module_consistency(self):
        """Test the smoke sweep is consistent with Monte-Carlo."""
        (result,) = verify_acceptance("quick", criteria=(12,)).results

        assert result.passed, result.measured
        assert result.measured["rows"] == 44


class TestReport:
    """Tests for results and the JSON Lines report."""

    def test_numerical_failure_captured(self):
        """Test a check raising a numerical error becomes a failed result."""

        def explode(settings):
            raise NumericalFailureError("non-finite quadrature", node=3)

        result = run_criterion(Criterion(99, "explode", "always raises", explode), get_suite("quick"))

        assert not result.passed
        assert result.error.startswith("NumericalFailureError")

    def test_on_start_called(self):
        """Test the progress hook sees each criterion."""
        seen = []
        verify_acceptance("default", criteria=(2,), on_start=lambda item: seen.append(item.number))

        assert seen == [2]

    def test_write(self, tmp_path):
        """Test one line per criterion plus a summary line."""
        report = AcceptanceReport(
            suite="quick",
            results=[
                CriterionResult(2, "sgd-tradeoff-identity", True, {"worst_residual": 0.0}),
                CriterionResult(7, "init-formulas", False, {"egen_gap": 0.2}),
            ],
        )
        path = report.write(tmp_path / "reports" / "acceptance.jsonl")

        with jsonlines.open(path) as reader:
            records = list(reader)
        assert [r.get("criterion") for r in records] == [2, 7, None]
        assert records[0]["suite"] == "quick"
        assert records[-1] == {"suite": "quick", "summary": True, "passed": False, "failed": [7]}

    def test_empty_report_does_not_pass(self):
        """Test a report with no results is not a pass."""
        assert not AcceptanceReport(suite="quick", results=[]).passed

    def test_report_path(self, tmp_path):
        """Test verify_acceptance writes the report when asked."""
        path = tmp_path / "r.jsonl"
        verify_acceptance("default", criteria=(2,), report_path=path)

        assert path.exists()
