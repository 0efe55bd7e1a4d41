"""Tests for ground truth, spectrum profiles, covariances and neuron ensembles."""

import numpy as np
import pytest

from robustlab.engine.spectral import alignment
from robustlab.exceptions import (
    InvalidInputError,
    NotPositiveSemidefiniteError,
    UndefinedAlignmentError,
)
from robustlab.model import (
    CovarianceDescriptor,
    GroundTruth,
    Normalization,
    SpectrumKind,
    SpectrumProfile,
    make_ground_truth,
    sample_ensemble,
)


class TestSpectrumProfile:
    """Named eigenvalue profiles."""

    def test_identity_frobenius_is_unit_norm(self):
        """identity + frobenius gives I/√d."""
        values = SpectrumProfile(normalization=Normalization.FROBENIUS).eigenvalues(16)
        np.testing.assert_allclose(values, np.full(16, 0.25))

    def test_identity_trace_sums_to_one(self):
        """identity + trace gives I/d."""
        values = SpectrumProfile(normalization=Normalization.TRACE).eigenvalues(10)
        assert abs(values.sum() - 1.0) < 1e-12

    def test_rank_flat_half(self):
        """rank_fraction 0.5 keeps the top half."""
        values = SpectrumProfile(kind=SpectrumKind.RANK_FLAT, rank_fraction=0.5).eigenvalues(10)
        assert np.count_nonzero(values) == 5
        assert np.all(values[:5] == 1.0)

    def test_power_law_is_descending(self):
        """Power-law eigenvalues decrease."""
        values = SpectrumProfile(kind=SpectrumKind.POWER_LAW, exponent=2.0).eigenvalues(6)
        assert np.all(np.diff(values) < 0)
        assert values[1] == pytest.approx(0.25)

    def test_custom_length_mismatch(self):
        """A custom spectrum must have d values."""
        with pytest.raises(InvalidInputError):
            SpectrumProfile(kind=SpectrumKind.CUSTOM, values=(1.0, 2.0)).eigenvalues(3)

    def test_negative_eigenvalue_rejected(self):
        """Negative profile values are not PSD."""
        profile = SpectrumProfile(kind=SpectrumKind.CUSTOM, values=(1.0, -0.5))
        with pytest.raises(NotPositiveSemidefiniteError):
            profile.eigenvalues(2)

    def test_dict_round_trip(self):
        """to_dict/from_dict reconstruct the profile."""
        profile = SpectrumProfile(
            kind=SpectrumKind.POWER_LAW,
            exponent=1.5,
            normalization=Normalization.TRACE,
            rotation_seed=4,
        )
        assert SpectrumProfile.from_dict(profile.to_dict()) == profile


class TestGroundTruth:
    """Quadratic target f⋆(x) = xᵀBx + b₀."""

    def test_centered_has_zero_mean(self, half_rank_truth):
        """make_ground_truth sets b₀ = −trace(B)."""
        assert half_rank_truth.is_centered
        assert half_rank_truth.offset == pytest.approx(-half_rank_truth.trace)

    def test_norms(self, random_truth):
        """‖f⋆‖² = 2‖B‖² + mean², 𝔖(f⋆)² = 4‖B‖²."""
        frob = float(np.sum(random_truth.b_matrix**2))
        assert random_truth.frob_sq == pytest.approx(frob)
        assert random_truth.norm_sq == pytest.approx(2 * frob + random_truth.mean**2)
        assert random_truth.dirichlet_sq == pytest.approx(4 * frob)

    def test_value_and_gradient(self, random_truth, dim):
        """value and gradient on a batch agree with the formulas."""
        x = np.random.default_rng(0).standard_normal((4, dim))
        b = random_truth.b_matrix
        expected = np.array([row @ b @ row for row in x]) + random_truth.offset
        np.testing.assert_allclose(random_truth.value(x), expected)
        np.testing.assert_allclose(random_truth.gradient(x), 2 * x @ b)

    def test_single_point_is_batched(self, random_truth, dim):
        """A 1-d input is treated as one row."""
        assert random_truth.value(np.ones(dim)).shape == (1,)

    def test_asymmetric_rejected(self):
        """B must be symmetric."""
        with pytest.raises(NotPositiveSemidefiniteError):
            GroundTruth(dim=2, b_matrix=np.array([[1.0, 0.5], [0.0, 1.0]]), offset=0.0)

    def test_indefinite_rejected(self):
        """B must be PSD."""
        with pytest.raises(NotPositiveSemidefiniteError):
            GroundTruth(dim=2, b_matrix=np.diag([1.0, -1.0]), offset=0.0)

    def test_shape_mismatch(self):
        """B must be d×d."""
        with pytest.raises(InvalidInputError):
            GroundTruth(dim=3, b_matrix=np.eye(2), offset=0.0)


class TestSpectralSummary:
    """Derived spectral quantities."""

    def test_truncated_norm(self, half_rank_truth, dim):
        """‖B‖²_{F,m} grows with m and saturates at ‖B‖²."""
        summary = half_rank_truth.summary
        values = [summary.frob_trunc_sq(m) for m in range(1, dim + 3)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(summary.frob_sq)
        assert summary.frob_trunc_sq(dim // 2) == pytest.approx(summary.frob_sq)

    def test_truncation_width_positive(self, half_rank_truth):
        """m ≥ 1."""
        with pytest.raises(InvalidInputError):
            half_rank_truth.summary.frob_trunc_sq(0)

    def test_beta_and_rank(self, flat_truth, half_rank_truth, dim):
        """β = 1 for B ∝ I, 1/2 for a flat half-rank B."""
        assert flat_truth.summary.beta == pytest.approx(1.0)
        assert half_rank_truth.summary.beta == pytest.approx(0.5)
        assert half_rank_truth.summary.rank == dim // 2
        assert half_rank_truth.summary.effective_rank == pytest.approx(dim / 2)

    def test_beta_zero_target(self):
        """β is undefined for B = 0."""
        truth = GroundTruth(dim=3, b_matrix=np.zeros((3, 3)), offset=0.0)
        with pytest.raises(InvalidInputError, match="β"):
            truth.summary.beta


class TestCovariance:
    """Neuron covariance Γ."""

    def test_isotropic(self, isotropic, dim):
        """Γ = I/d has unit trace and ‖Γ‖² = 1/d."""
        assert np.trace(isotropic.gamma) == pytest.approx(1.0)
        assert isotropic.frob_sq == pytest.approx(1.0 / dim)
        assert isotropic.check_bounded(1.0 + 1e-9) == pytest.approx(1.0)

    def test_proportional_alignment_is_one(self, half_rank_truth):
        """Γ ∝ B is perfectly aligned."""
        covariance = CovarianceDescriptor.proportional_to(half_rank_truth.b_matrix)
        assert alignment(half_rank_truth.b_matrix, covariance.gamma) == pytest.approx(1.0)

    def test_isotropic_alignment_half_rank(self, half_rank_truth, isotropic):
        """α² = 1/2 for Γ = I/d and a flat half-rank B."""
        assert alignment(half_rank_truth.b_matrix, isotropic.gamma) ** 2 == pytest.approx(0.5)

    def test_trace_must_be_one(self):
        """trace(Γ) = 1 is enforced."""
        with pytest.raises(InvalidInputError):
            CovarianceDescriptor(dim=2, gamma=np.eye(2))

    def test_bound_violation(self):
        """d‖Γ‖_op above the bound raises."""
        covariance = CovarianceDescriptor.from_profile(
            SpectrumProfile(kind=SpectrumKind.RANK_FLAT, rank=1), 4
        )
        with pytest.raises(InvalidInputError):
            covariance.check_bounded(2.0)

    def test_zero_alignment_undefined(self, isotropic, dim):
        """Alignment with B = 0 is undefined."""
        with pytest.raises(UndefinedAlignmentError):
            alignment(np.zeros((dim, dim)), isotropic.gamma)


class TestNeuronEnsemble:
    """W with iid rows N(0, Γ)."""

    def test_deterministic(self, isotropic):
        """Same (Γ, m, seed) gives the same W."""
        a = sample_ensemble(isotropic, 7, seed=1)
        b = sample_ensemble(isotropic, 7, seed=1)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert not np.array_equal(a.weights, sample_ensemble(isotropic, 7, seed=2).weights)

    def test_shape_and_ratio(self, ensemble, dim):
        """W is m×d and ρ = m/d."""
        assert ensemble.weights.shape == (2 * dim, dim)
        assert ensemble.rho == pytest.approx(2.0)
        np.testing.assert_allclose(ensemble.theta, ensemble.weights @ ensemble.weights.T)
        np.testing.assert_allclose(ensemble.sq_norms, np.diag(ensemble.theta))

    def test_rows_in_range_of_gamma(self, half_rank_truth):
        """Rows lie in range(Γ) when Γ is rank-deficient."""
        covariance = CovarianceDescriptor.proportional_to(half_rank_truth.b_matrix)
        weights = sample_ensemble(covariance, 20, seed=0).weights
        eigenvalues, eigenvectors = np.linalg.eigh(covariance.gamma)
        null = eigenvectors[:, eigenvalues < 1e-12]
        assert np.max(np.abs(weights @ null)) < 1e-10

    def test_weights_are_read_only(self, ensemble):
        """Ensembles are immutable."""
        with pytest.raises(ValueError):
            ensemble.weights[0, 0] = 1.0

    def test_width_positive(self, isotropic):
        """m ≥ 1."""
        with pytest.raises(InvalidInputError):
            sample_ensemble(isotropic, 0, seed=0)

    def test_norms_concentrate(self):
        """‖w_j‖² ≈ trace(Γ) = 1 in high dimension."""
        covariance = CovarianceDescriptor.isotropic(400)
        norms = sample_ensemble(covariance, 50, seed=0).sq_norms
        assert abs(norms.mean() - 1.0) < 0.05


def test_make_ground_truth_rotation_keeps_spectrum():
    """A rotated profile has the same eigenvalues."""
    profile = SpectrumProfile(kind=SpectrumKind.POWER_LAW, rotation_seed=9)
    gt = make_ground_truth(profile, 8)
    np.testing.assert_allclose(gt.summary.eigenvalues, profile.eigenvalues(8), atol=1e-12)
    assert np.count_nonzero(np.abs(gt.b_matrix - np.diag(np.diag(gt.b_matrix))) > 1e-8) > 0
