"""Symmetric eigen-utilities shared by every module.

All checks use the double-precision tolerance 1e-10: a matrix is accepted as
symmetric PSD when max |A − Aᵀ| ≤ 1e-10 and λ_min ≥ −1e-10.
"""

import numpy as np

from robustlab.engine.norms import FROBENIUS_INNER_PRODUCT, frobenius_sq
from robustlab.exceptions import (
    InvalidInputError,
    NotPositiveSemidefiniteError,
    UndefinedAlignmentError,
)
from robustlab.types import FloatArray

PSD_TOLERANCE = 1e-10


def as_square(matrix: FloatArray, name: str = "matrix") -> FloatArray:
    """Return ``matrix`` as a float64 square array or raise."""
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise InvalidInputError(f"{name} must be square", shape=array.shape)
    return array


def sorted_eigh(matrix: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    Ties keep the index order produced by ``numpy.linalg.eigh`` reversed
    through a stable sort, so the ordering is reproducible.
    """
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], eigenvectors[:, order]


def sorted_eigvalsh(matrix: FloatArray) -> FloatArray:
    """Eigenvalues of a symmetric matrix, sorted descending."""
    eigenvalues = np.linalg.eigvalsh(matrix)
    return np.sort(eigenvalues)[::-1].copy()


def check_psd(matrix: FloatArray, name: str = "matrix", tol: float = PSD_TOLERANCE) -> FloatArray:
    """Validate that ``matrix`` is symmetric PSD and return its eigenvalues (descending)."""
    array = as_square(matrix, name)
    if not np.all(np.isfinite(array)):
        raise NotPositiveSemidefiniteError(f"{name} has non-finite entries")
    asymmetry = float(np.max(np.abs(array - array.T))) if array.size else 0.0
    if asymmetry > tol:
        raise NotPositiveSemidefiniteError(f"{name} is not symmetric", asymmetry=asymmetry)
    eigenvalues = sorted_eigvalsh(array) if array.size else np.zeros(0)
    if eigenvalues.size and eigenvalues[-1] < -tol:
        raise NotPositiveSemidefiniteError(
            f"{name} is not positive semidefinite", min_eigenvalue=float(eigenvalues[-1])
        )
    return eigenvalues


def psd_sqrt(matrix: FloatArray) -> FloatArray:
    """Symmetric square root, clamping round-off negative eigenvalues to zero."""
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    if np.any(eigenvalues < -PSD_TOLERANCE):
        raise NotPositiveSemidefiniteError(
            "square root of an indefinite matrix", min_eigenvalue=float(eigenvalues.min())
        )
    clamped = np.maximum(eigenvalues, 0.0)
    root: FloatArray = (eigenvectors * np.sqrt(clamped)) @ eigenvectors.T
    return root


def frobenius_truncated(b_matrix: FloatArray, m: int) -> float:
    """‖B‖_{F,m}² = Σ_{k ≤ m∧d} λ_k(B)² with eigenvalues sorted descending.

    For PSD ``B`` the singular values coincide with the eigenvalues.
    """
    if m < 1:
        raise InvalidInputError("truncation width must be at least 1", m=m)
    eigenvalues = sorted_eigvalsh(as_square(b_matrix, "B"))
    top = eigenvalues[: min(m, eigenvalues.size)]
    return float(np.sum(top**2))


def best_rank_approximation(b_matrix: FloatArray, m: int) -> FloatArray:
    """Best rank-m approximation of a symmetric PSD matrix (Eckart–Young)."""
    if m < 1:
        raise InvalidInputError("rank must be at least 1", m=m)
    eigenvalues, eigenvectors = sorted_eigh(as_square(b_matrix, "B"))
    k = min(m, eigenvalues.size)
    top_vectors = eigenvectors[:, :k]
    approx: FloatArray = (top_vectors * eigenvalues[:k]) @ top_vectors.T
    return approx


def flatness(b_matrix: FloatArray) -> float:
    """β = trace(B)² / (d‖B‖_F²); equals 1 iff B ∝ I."""
    array = as_square(b_matrix, "B")
    norm_sq = frobenius_sq(array)
    if norm_sq == 0.0:
        raise InvalidInputError("β undefined for B = 0")
    return float(np.trace(array) ** 2 / (array.shape[0] * norm_sq))


def alignment(b_matrix: FloatArray, gamma: FloatArray) -> float:
    """α = trace(BΓ) / (‖B‖_F‖Γ‖_F)."""
    b_array = as_square(b_matrix, "B")
    g_array = as_square(gamma, "Γ")
    if b_array.shape != g_array.shape:
        raise InvalidInputError("dimension mismatch", b=b_array.shape, gamma=g_array.shape)
    if not np.any(b_array) or not np.any(g_array):
        raise UndefinedAlignmentError("alignment undefined for a zero matrix")
    # Both symmetric, so trace(BΓ) is the Frobenius inner product.
    return FROBENIUS_INNER_PRODUCT.cosine(b_array, g_array)


def effective_rank(eigenvalues: FloatArray) -> float:
    """Participation ratio (Σλ)² / Σλ² of a nonnegative spectrum."""
    total_sq = float(np.sum(eigenvalues**2))
    if total_sq == 0.0:
        return 0.0
    return float(np.sum(eigenvalues) ** 2 / total_sq)
