"""Gaussian expectations by Gauss–Hermite and adaptive quadrature.

Rules use the probabilist's weight e^{−t²/2}; weights are renormalized to sum
to one so that ``rule.expectation(f)`` approximates E[f(G)], G ~ N(0, 1).
Functions with kinks (ReLU) should pass their breakpoints: one-dimensional
expectations then integrate each smooth piece adaptively with SciPy.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate, stats

from robustlab.exceptions import InvalidInputError, NumericalFailureError
from robustlab.types import FloatArray

ScalarFn = Callable[[FloatArray], FloatArray]

DEFAULT_NODES = 200
DEFAULT_BIVARIATE_NODES = 80
DEGENERATE_CORRELATION = 1.0 - 1e-12


@dataclass(frozen=True)
class GaussHermiteRule:
    """Gauss–Hermite nodes and normalized weights for N(0, 1)."""

    nodes: FloatArray
    weights: FloatArray

    @classmethod
    def create(cls, n_nodes: int = DEFAULT_NODES) -> "GaussHermiteRule":
        """Cached rule with ``n_nodes`` points."""
        if n_nodes < 1:
            raise InvalidInputError("node count must be positive", n_nodes=n_nodes)
        return _cached_rule(n_nodes)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def expectation(self, fn: ScalarFn) -> float:
        """E[fn(G)]."""
        return _finite(float(np.dot(self.weights, fn(self.nodes))), "Gauss–Hermite sum")


@lru_cache(maxsize=16)
def _cached_rule(n_nodes: int) -> GaussHermiteRule:
    nodes, weights = hermegauss(n_nodes)
    weights = weights / math.sqrt(2.0 * math.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GaussHermiteRule(nodes=nodes, weights=weights)


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise NumericalFailureError(f"{what} is not finite", value=value)
    return value


def _pieces(breakpoints: Sequence[float]) -> list[tuple[float, float]]:
    edges = [-math.inf, *sorted(float(b) for b in breakpoints), math.inf]
    return list(zip(edges[:-1], edges[1:], strict=True))


def gaussian_expectation(
    fn: ScalarFn,
    nodes: int = DEFAULT_NODES,
    breakpoints: Sequence[float] = (),
) -> float:
    """E[fn(G)] for G ~ N(0, 1).

    Smooth integrands use Gauss–Hermite with ``nodes`` points. With
    ``breakpoints`` the integral is split at each kink and every piece is
    integrated with ``scipy.integrate.quad`` against the normal density.
    """
    if not breakpoints:
        return GaussHermiteRule.create(nodes).expectation(fn)

    def integrand(t: float) -> float:
        return float(fn(np.array([t]))[0]) * float(stats.norm.pdf(t))

    total = 0.0
    for lower, upper in _pieces(breakpoints):
        value, _ = integrate.quad(integrand, lower, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += value
    return _finite(total, "adaptive Gaussian quadrature")


def scaled_quadratic_moments(
    fn: ScalarFn,
    scales: FloatArray,
    quadratic: FloatArray,
    constant: FloatArray,
    nodes: int = DEFAULT_NODES,
    breakpoints: Sequence[float] = (),
) -> FloatArray:
    """Vector of E[(a_j G² + c_j) fn(s_j G)] over j.

    ``scales`` holds s_j ≥ 0, ``quadratic`` a_j and ``constant`` c_j.
    """
    scales = np.asarray(scales, dtype=np.float64)
    quadratic = np.asarray(quadratic, dtype=np.float64)
    constant = np.asarray(constant, dtype=np.float64)
    if not breakpoints:
        rule = GaussHermiteRule.create(nodes)
        g = rule.nodes
        values = fn(scales[:, None] * g[None, :])
        weight = quadratic[:, None] * g[None, :] ** 2 + constant[:, None]
        result: FloatArray = (weight * values) @ rule.weights
    else:
        result = np.empty(scales.size)
        for j, (s, a, c) in enumerate(zip(scales, quadratic, constant, strict=True)):
            if s == 0.0:
                result[j] = (a + c) * float(fn(np.zeros(1))[0])
                continue
            local = [b / s for b in breakpoints]

            def integrand(g: FloatArray, s: float = s, a: float = a, c: float = c) -> FloatArray:
                out: FloatArray = (a * g**2 + c) * fn(s * g)
                return out

            result[j] = gaussian_expectation(integrand, nodes, local)
    if not np.all(np.isfinite(result)):
        raise NumericalFailureError("non-finite moment in scaled quadrature")
    return result


def bivariate_expectations(
    fn_a: ScalarFn,
    fn_b: ScalarFn,
    var_a: FloatArray,
    var_b: FloatArray,
    cov: FloatArray,
    nodes: int = DEFAULT_BIVARIATE_NODES,
    chunk_size: int = 256,
) -> FloatArray:
    """E[fn_a(X) fn_b(Y)] for a batch of centered Gaussian pairs.

    Pair p has covariance [[var_a[p], cov[p]], [cov[p], var_b[p]]]. The pair is
    written through the Cholesky factor, X = √va·G₁ and
    Y = (c/√va)·G₁ + √(vb − c²/va)·G₂, and integrated with a tensor
    Gauss–Hermite rule. Pairs with |correlation| > 1 − 1e-12 are collapsed to
    the one-dimensional rule Y = ±√(vb/va)·X.
    """
    var_a = np.asarray(var_a, dtype=np.float64).ravel()
    var_b = np.asarray(var_b, dtype=np.float64).ravel()
    cov = np.asarray(cov, dtype=np.float64).ravel()
    n_pairs = var_a.size
    out = np.empty(n_pairs)

    rule = GaussHermiteRule.create(nodes)
    g, w = rule.nodes, rule.weights

    with np.errstate(divide="ignore", invalid="ignore"):
        corr = cov / np.sqrt(var_a * var_b)
    corr = np.where(np.isfinite(corr), corr, 0.0)
    degenerate = np.abs(corr) > DEGENERATE_CORRELATION

    if np.any(degenerate):
        fine = GaussHermiteRule.create(DEFAULT_NODES)
        sa = np.sqrt(var_a[degenerate])
        sb = np.sign(corr[degenerate]) * np.sqrt(var_b[degenerate])
        xa = fn_a(sa[:, None] * fine.nodes[None, :])
        xb = fn_b(sb[:, None] * fine.nodes[None, :])
        out[degenerate] = (xa * xb) @ fine.weights

    regular = np.flatnonzero(~degenerate)
    for start in range(0, regular.size, chunk_size):
        idx = regular[start : start + chunk_size]
        va, vb, c = var_a[idx], var_b[idx], cov[idx]
        sa = np.sqrt(va)
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(sa > 0.0, c / sa, 0.0)
        resid = np.sqrt(np.maximum(vb - slope**2, 0.0))

        fa = fn_a(sa[:, None] * g[None, :])
        y = slope[:, None, None] * g[None, :, None] + resid[:, None, None] * g[None, None, :]
        inner = fn_b(y) @ w
        out[idx] = (fa * inner) @ w

    if not np.all(np.isfinite(out)):
        raise NumericalFailureError("non-finite bivariate quadrature")
    return out
