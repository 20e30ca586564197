"""
Rank-revealing linear algebra helpers shared by library, classify and metrics.
"""
from typing import Tuple

import numpy as np
from scipy import linalg as sla


def default_rcond(shape: Tuple[int, int], sigma_max: float) -> float:
    """Cut-off below which singular values count as zero."""
    return max(shape) * np.finfo(np.float64).eps * sigma_max


def rank_revealing_pinv(matrix: np.ndarray) -> Tuple[np.ndarray, int, np.ndarray, np.ndarray]:
    """Moore-Penrose pseudoinverse through an explicit SVD.

    Singular values at or below ``max(m, k) * eps * sigma_max`` are treated
    as zero, which gives minimum-norm least-squares solutions for
    rank-deficient matrices.

    Returns:
        (pinv, numerical rank, singular values, orthonormal range basis)
    """
    matrix = np.asarray(matrix)
    rows, cols = matrix.shape
    dtype = np.result_type(matrix.dtype, np.float64)
    if rows == 0 or cols == 0:
        return np.zeros((cols, rows), dtype=dtype), 0, np.zeros(0), np.zeros((rows, 0), dtype=dtype)

    u, s, vh = sla.svd(matrix, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((cols, rows), dtype=dtype), 0, s, np.zeros((rows, 0), dtype=dtype)

    tol = default_rcond(matrix.shape, s[0])
    rank = int(np.count_nonzero(s > tol))
    u_r = u[:, :rank]
    pinv = (vh[:rank].conj().T / s[:rank]) @ u_r.conj().T
    return pinv, rank, s, u_r


def orthonormal_basis(matrix: np.ndarray) -> Tuple[np.ndarray, int]:
    """Orthonormal basis of the column span and the numerical rank."""
    _, rank, _, basis = rank_revealing_pinv(matrix)
    return basis, rank


def spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value (0 for empty matrices)."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(sla.svdvals(matrix)[0])


def normalize_columns(matrix: np.ndarray) -> np.ndarray:
    """Scale every nonzero column to unit 2-norm."""
    matrix = np.asarray(matrix)
    norms = np.linalg.norm(matrix, axis=0)
    norms = np.where(norms > 0.0, norms, 1.0)
    return matrix / norms
