"""Property-based tests for spectral quantities, the SGD limit and the trust-region solver.

Run with: pytest -m property tests/test_properties.py -v
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from robustlab.engine.spectral import alignment, frobenius_truncated, sorted_eigh
from robustlab.engine.trust_region import solve_trust_region
from robustlab.model import GroundTruth
from robustlab.population import ridge_resolvent
from robustlab.regimes import eval_sgd_limit

pytestmark = pytest.mark.property

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def psd_matrix(draw, min_dim=2, max_dim=12):
    """Random PSD matrix F Fᵀ/d with rank between 1 and d."""
    dim = draw(st.integers(min_value=min_dim, max_value=max_dim))
    rank = draw(st.integers(min_value=1, max_value=dim))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    factor = np.random.default_rng(seed).standard_normal((dim, rank))
    return factor @ factor.T / dim


@st.composite
def symmetric_matrix(draw, dim):
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    raw = np.random.default_rng(seed).standard_normal((dim, dim))
    return (raw + raw.T) / 2.0


class TestSpectralProperties:
    """Invariants of truncated norms and alignment."""

    @given(b=psd_matrix())
    @SETTINGS
    def test_truncated_frobenius_monotone(self, b):
        """Test ‖B‖_{F,m}² is nondecreasing in m and reaches ‖B‖_F² at m = d."""
        dim = b.shape[0]
        values = [frobenius_truncated(b, m) for m in range(1, dim + 2)]

        assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:], strict=False))
        assert values[dim - 1] == pytest.approx(float(np.sum(b * b)), rel=1e-10)
        assert values[-1] == values[dim - 1]

    @given(b=psd_matrix(), gamma=psd_matrix())
    @SETTINGS
    def test_alignment_bounds(self, b, gamma):
        """Test α lies in [0, 1] for PSD pairs of equal size."""
        dim = min(b.shape[0], gamma.shape[0])
        value = alignment(b[:dim, :dim], gamma[:dim, :dim])

        assert -1e-12 <= value <= 1.0 + 1e-12

    @given(b=psd_matrix(), scale=st.floats(min_value=1e-3, max_value=1e3))
    @SETTINGS
    def test_alignment_scale_invariant(self, b, scale):
        """Test α(B, cB) = 1."""
        assert alignment(b, scale * b) == pytest.approx(1.0, abs=1e-10)


class TestRegimeProperties:
    """Invariants of closed-form regimes."""

    @given(b=psd_matrix(), m=st.integers(min_value=1, max_value=30))
    @SETTINGS
    def test_sgd_limit_sums_to_one(self, b, m):
        """Test egen + erob = 1 and both lie in [0, 1]."""
        evaluation = eval_sgd_limit(GroundTruth.centered(b), m)

        assert evaluation.egen + evaluation.erob == pytest.approx(1.0, abs=1e-12)
        assert -1e-12 <= evaluation.erob <= 1.0 + 1e-12

    @given(u=psd_matrix(), ridge=st.floats(min_value=1e-6, max_value=1e4))
    @SETTINGS
    def test_projector_spectrum(self, u, ridge):
        """Test P_λ is symmetric with eigenvalues in [0, 1]."""
        projector = ridge_resolvent(u, ridge).projector
        eigenvalues = np.linalg.eigvalsh(projector)

        np.testing.assert_allclose(projector, projector.T, atol=1e-12)
        assert eigenvalues.min() >= -1e-10
        assert eigenvalues.max() <= 1.0 + 1e-10


class TestTrustRegionProperties:
    """Global optimality of the trust-region solver."""

    @given(
        data=st.data(),
        dim=st.integers(min_value=2, max_value=8),
        radius=st.floats(min_value=0.1, max_value=10.0),
    )
    @SETTINGS
    def test_beats_sampled_feasible_points(self, data, dim, radius):
        """Test no sampled point in the ball has a lower model value."""
        hessian = data.draw(symmetric_matrix(dim))
        seed = data.draw(st.integers(min_value=0, max_value=2**31 - 1))
        scale = data.draw(st.sampled_from([0.0, 0.01, 1.0, 5.0]))
        gradient = scale * np.random.default_rng(seed).standard_normal(dim)
        eigenvalues, eigenvectors = sorted_eigh(hessian)
        solution = solve_trust_region(eigenvalues, eigenvectors, gradient, radius)

        assert np.linalg.norm(solution.step) <= radius * (1.0 + 1e-8)

        rng = np.random.default_rng(dim)
        points = rng.standard_normal((200, dim))
        points *= (radius * rng.uniform(size=(200, 1)) ** (1.0 / dim)) / np.linalg.norm(points, axis=1, keepdims=True)
        values = points @ gradient + 0.5 * np.einsum("ij,jk,ik->i", points, hessian, points)
        assert solution.value <= values.min() + 1e-8 * max(1.0, abs(values.min()))
