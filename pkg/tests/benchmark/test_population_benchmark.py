"""Benchmarks for population matrices and regime fits."""

import numpy as np
import pytest

from robustlab.activation import get_activation
from robustlab.model import CovarianceDescriptor, Normalization, SpectrumProfile, make_ground_truth, sample_ensemble
from robustlab.population import population_matrices
from robustlab.regimes import fit_nt, fit_rf

pytestmark = pytest.mark.benchmark

DIM = 100


@pytest.fixture(scope="module")
def setup():
    """Ground truth and a width-2d ensemble."""
    gt = make_ground_truth(SpectrumProfile(normalization=Normalization.FROBENIUS), DIM)
    ensemble = sample_ensemble(CovarianceDescriptor.isotropic(DIM), 2 * DIM, seed=0)
    return gt, ensemble


class TestPopulationBenchmarks:
    """Benchmark U, v and C."""

    def test_closed_form_quadratic(self, benchmark, setup):
        """Benchmark the quadratic closed forms."""
        gt, ensemble = setup
        profile = get_activation("quadratic")

        result = benchmark(population_matrices, ensemble, profile, gt)
        assert result.u.shape == (2 * DIM, 2 * DIM)

    def test_quadrature_tanh(self, benchmark, setup):
        """Benchmark the bivariate quadrature path."""
        gt, ensemble = setup
        profile = get_activation("tanh")

        result = benchmark(population_matrices, ensemble, profile, gt)
        assert np.all(np.isfinite(result.c))


class TestRegimeBenchmarks:
    """Benchmark regime fits on precomputed matrices."""

    def test_fit_rf(self, benchmark, setup):
        """Benchmark the ridge solve and error evaluation."""
        gt, ensemble = setup
        profile = get_activation("quadratic")
        population = population_matrices(ensemble, profile, gt)

        result = benchmark(fit_rf, ensemble, profile, gt, 0.1, population)
        assert 0.0 <= result.egen <= 1.0 + 1e-9

    def test_fit_nt(self, benchmark, setup):
        """Benchmark the neural-tangent projections."""
        gt, ensemble = setup

        result = benchmark(fit_nt, ensemble, gt)
        assert result.egen + result.erob == pytest.approx(1.0, abs=1e-8)
