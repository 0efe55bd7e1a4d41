"""Tests for the robustness audit."""

import math

import jsonlines
import numpy as np
import pytest

from robustlab.activation import get_activation
from robustlab.audit import (
    MonteCarloEstimate,
    Predictor,
    adversarial_increment,
    dirichlet_energy,
    gradient_check,
    increment_derivative_check,
    lipschitz_comparison,
    mc_mean,
    run_audit,
    universal_perturbation,
    write_audit_reports,
)
from robustlab.exceptions import InvalidInputError
from robustlab.model import GroundTruth, sample_ensemble


class TestPredictor:
    """Value and gradient on batches."""

    def test_quadratic(self):
        """f(x) = xᵀMx + c with M symmetrized."""
        predictor = Predictor.quadratic(np.array([[1.0, 2.0], [0.0, 1.0]]), offset=0.5)
        x = np.array([1.0, 1.0])
        assert predictor.value(x)[0] == pytest.approx(4.5)
        np.testing.assert_allclose(predictor.gradient(x)[0], [4.0, 4.0])
        np.testing.assert_allclose(predictor.quadratic_form.matrix, [[1.0, 1.0], [1.0, 1.0]])

    def test_linear_and_constant(self):
        """Linear gradients are constant; constants have none."""
        linear = Predictor.linear(np.array([1.0, -2.0]), 1.0)
        np.testing.assert_allclose(linear.gradient(np.zeros((3, 2))), np.tile([1.0, -2.0], (3, 1)))
        constant = Predictor.constant(3.0, dim=2)
        assert constant.value(np.ones(2))[0] == 3.0
        np.testing.assert_allclose(constant.gradient(np.ones(2)), 0.0)

    def test_network_gradient(self, isotropic):
        """Network gradients pass the finite-difference check."""
        ensemble = sample_ensemble(isotropic, 5, seed=0)
        weights = np.linspace(-1.0, 1.0, 5)
        for name in ("quadratic", "tanh"):
            predictor = Predictor.network(ensemble.weights, weights, get_activation(name))
            assert gradient_check(predictor).passed

    def test_broken_gradient_detected(self):
        """A wrong gradient fails the check."""
        truth = Predictor.quadratic(np.eye(3))
        broken = Predictor(truth.value_fn, lambda x: 3.0 * x, 3, None, "broken")
        check = gradient_check(broken)
        assert not check.passed
        assert check.max_relative_error > 0.1


class TestMonteCarlo:
    """Seeded Monte-Carlo means."""

    def test_mean_of_square(self):
        """E‖x‖² = d."""
        estimate = mc_mean(lambda x: np.sum(x**2, axis=1), 4, 20_000, seed=0)
        assert estimate.within(4.0)
        assert estimate.n_samples == 20_000

    def test_batches_do_not_change_result(self):
        """The estimate depends on the batch layout only through the seed streams."""
        a = mc_mean(lambda x: x[:, 0], 2, 1000, seed=1, batch_size=1000)
        b = mc_mean(lambda x: x[:, 0], 2, 1000, seed=1, batch_size=1000)
        assert a == b

    def test_needs_two_samples(self):
        """Variance needs n ≥ 2."""
        with pytest.raises(InvalidInputError):
            mc_mean(lambda x: x[:, 0], 2, 1, seed=0)

    def test_z_score(self):
        """Exact agreement is z = 0; zero SE with a gap is infinite."""
        assert MonteCarloEstimate(1.0, 0.0, 10).z_score(1.0) == 0.0
        assert math.isinf(MonteCarloEstimate(1.0, 0.0, 10).z_score(2.0))
        assert MonteCarloEstimate(1.0, 0.5, 10).z_score(2.0) == pytest.approx(2.0)


class TestDirichletEnergy:
    """𝔖(f)² = E‖∇f‖²."""

    def test_ground_truth(self, random_truth):
        """𝔖(f⋆)² = 4‖B‖_F²."""
        estimate = dirichlet_energy(Predictor.from_ground_truth(random_truth), 20_000, seed=0)
        assert estimate.within(random_truth.dirichlet_sq)

    def test_first_moment_below_second(self, flat_truth):
        """𝔖₁ ≤ 𝔖 by Jensen."""
        predictor = Predictor.from_ground_truth(flat_truth)
        first = dirichlet_energy(predictor, 5000, seed=1, q=1)
        second = dirichlet_energy(predictor, 5000, seed=1, q=2)
        assert first.mean <= math.sqrt(second.mean)

    def test_q_restricted(self, flat_truth):
        """q ∈ {1, 2}."""
        with pytest.raises(InvalidInputError):
            dirichlet_energy(Predictor.from_ground_truth(flat_truth), 100, seed=0, q=3)


class TestIncrements:
    """Δ_f(x; δ) = sup_{‖v‖≤δ} |f(x + v) − f(x)|."""

    def test_exact_quadratic(self):
        """f = ‖x‖² at x = e₁: Δ = 2δ + δ²."""
        predictor = Predictor.quadratic(np.eye(2))
        result = adversarial_increment(predictor, np.array([1.0, 0.0]), 0.5)
        assert result.exact
        assert result.value == pytest.approx(1.25)
        assert np.linalg.norm(result.direction) == pytest.approx(0.5)

    def test_indefinite_takes_larger_side(self):
        """With M = diag(1, −3) at 0 the decrease wins: Δ = 3δ²."""
        predictor = Predictor.quadratic(np.diag([1.0, -3.0]))
        result = adversarial_increment(predictor, np.zeros(2), 0.1)
        assert result.value == pytest.approx(0.03)

    def test_ascent_is_lower_bound(self):
        """Projected ascent never beats the exact value and comes close."""
        predictor = Predictor.quadratic(np.diag([2.0, 0.5, -1.0]), offset=1.0)
        x = np.array([0.3, -1.0, 0.5])
        exact = adversarial_increment(predictor, x, 0.2)
        ascent = adversarial_increment(predictor, x, 0.2, force_ascent=True)
        assert ascent.lower_bound
        assert ascent.value <= exact.value + 1e-12
        assert ascent.value >= 0.95 * exact.value

    def test_delta_positive(self):
        """δ > 0."""
        with pytest.raises(InvalidInputError):
            adversarial_increment(Predictor.quadratic(np.eye(2)), np.zeros(2), 0.0)

    def test_ratio_converges_to_gradient_norm(self, random_truth):
        """Δ/δ → E‖∇f‖ as δ shrinks."""
        predictor = Predictor.from_ground_truth(random_truth)
        table = increment_derivative_check(predictor, 50, (1e-1, 1e-2, 1e-3), seed=0)
        assert all(row.exact for row in table.rows)
        assert table.relative_gap() < 0.02
        gaps = [abs(row.mean_ratio - table.grad_norm_mean) for row in table.rows]
        assert gaps[-1] <= gaps[0]

    def test_grid_validation(self, flat_truth):
        """δ grid is positive and strictly decreasing."""
        predictor = Predictor.from_ground_truth(flat_truth)
        with pytest.raises(InvalidInputError):
            increment_derivative_check(predictor, 10, (1e-2, 1e-1), seed=0)
        with pytest.raises(InvalidInputError):
            increment_derivative_check(predictor, 10, (), seed=0)


class TestUniversalPerturbation:
    """Top eigenvector of J(f)."""

    def test_aligns_with_top_direction(self):
        """J(f⋆) = 4B² for f⋆ = xᵀBx: the top direction is B's."""
        b = np.diag([2.0, 1.0, 0.5, 0.1])
        truth = GroundTruth.centered(b)
        result = universal_perturbation(Predictor.from_ground_truth(truth), 20_000, 500, seed=0)
        assert result.converged
        assert abs(result.direction[0]) > 0.99
        assert result.eigenvalue <= result.trace

    def test_zero_field(self, dim):
        """A constant predictor has no gradient field."""
        result = universal_perturbation(Predictor.constant(1.0, dim), 100, 10, seed=0)
        assert result.zero_field
        assert result.eigenvalue == 0.0

    def test_validation(self, flat_truth):
        """At least one sample and one iteration."""
        predictor = Predictor.from_ground_truth(flat_truth)
        with pytest.raises(InvalidInputError):
            universal_perturbation(predictor, 0, 10, seed=0)
        with pytest.raises(InvalidInputError):
            universal_perturbation(predictor, 10, 0, seed=0)


def test_lipschitz_overstates_sobolev():
    """Rank-one B: the Lipschitz bound grows like √d while 𝔖 stays at 2."""
    rows = lipschitz_comparison(dims=(10, 40), n_samples=5000, seed=0)
    assert rows[0].sobolev == pytest.approx(2.0)
    assert rows[1].ratio == pytest.approx(2.0 * rows[0].ratio)
    assert abs(rows[0].sobolev_mc - 2.0) < 0.1


def test_run_audit_and_report(tmp_path, flat_truth):
    """A full audit serializes to one JSON Lines record per predictor."""
    report = run_audit(
        Predictor.from_ground_truth(flat_truth), n_samples=2000, n_points=10, power_iters=50
    )
    assert report.gradient.passed
    assert set(report.sq_q) == {1, 2}
    path = write_audit_reports([report], tmp_path / "audit.jsonl")
    with jsonlines.open(path) as reader:
        records = list(reader)
    assert len(records) == 1
    assert records[0]["predictor"] == "ground_truth"
    assert len(records[0]["increments"]["rows"]) == 3
