"""Shared fixtures: small problems that run in milliseconds."""

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from robustlab.activation import get_activation  # noqa: E402
from robustlab.model import (  # noqa: E402
    CovarianceDescriptor,
    GroundTruth,
    Normalization,
    SpectrumKind,
    SpectrumProfile,
    make_ground_truth,
    sample_ensemble,
)


@pytest.fixture
def dim():
    """Input dimension used by most unit tests."""
    return 12


@pytest.fixture
def quadratic():
    """σ(t) = t² − 1."""
    return get_activation("quadratic")


@pytest.fixture
def isotropic(dim):
    """Γ = I/d."""
    return CovarianceDescriptor.isotropic(dim)


@pytest.fixture
def flat_truth(dim):
    """B = I/√d, centered."""
    return make_ground_truth(SpectrumProfile(normalization=Normalization.FROBENIUS), dim)


@pytest.fixture
def half_rank_truth(dim):
    """Flat rank-d/2 B with unit Frobenius norm, rotated."""
    profile = SpectrumProfile(
        kind=SpectrumKind.RANK_FLAT,
        rank_fraction=0.5,
        normalization=Normalization.FROBENIUS,
        rotation_seed=3,
    )
    return make_ground_truth(profile, dim)


@pytest.fixture
def random_truth(dim):
    """Generic full-rank PSD B with a nonzero mean."""
    rng = np.random.default_rng(11)
    factor = rng.standard_normal((dim, dim))
    return GroundTruth(dim=dim, b_matrix=factor @ factor.T / dim**2, offset=0.3)


@pytest.fixture
def ensemble(isotropic):
    """m = 2d neurons drawn from Γ = I/d."""
    return sample_ensemble(isotropic, 2 * isotropic.dim, seed=5)


@pytest.fixture
def narrow_ensemble(isotropic):
    """m = d/2 neurons, so range(Wᵀ) is a proper subspace."""
    return sample_ensemble(isotropic, isotropic.dim // 2, seed=6)
