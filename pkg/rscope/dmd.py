"""
Dynamic mode decomposition: snapshot pairing, truncated SVD, reduced
operator and modes/eigenvalues.
"""
from typing import Optional, Tuple

import numpy as np
from scipy import linalg as sla

from config.settings import settings
from rscope.exceptions import DimensionError, RankError, SingularityError
from rscope.models import DmdModel, RankPolicy, SnapshotMatrix
from utils.logger import logger


def split_pair(snap: SnapshotMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``X0`` (columns 0..s-2) and ``X1`` (columns 1..s-1)."""
    data = snap.data if isinstance(snap, SnapshotMatrix) else np.asarray(snap, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 2:
        raise DimensionError("split_pair needs at least two snapshots")
    return data[:, :-1], data[:, 1:]


def _effective_rank(sigma: np.ndarray, policy: RankPolicy) -> int:
    """Rank chosen by ``policy`` after dropping singular values below the floor."""
    above_floor = int(np.count_nonzero((sigma > 0.0) & (sigma / sigma[0] >= policy.sigma_rel_floor)))
    if policy.kind == "fixed":
        rank = policy.rank
    else:
        energy = np.cumsum(sigma ** 2) / np.sum(sigma ** 2)
        # tolerance keeps exact low-rank data from picking up round-off modes
        rank = int(np.searchsorted(energy, policy.threshold - 1e-12, side="left")) + 1
    return max(1, min(rank, above_floor, sigma.shape[0]))


def _svd(X0: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    X0 = np.asarray(X0, dtype=np.float64)
    if not np.all(np.isfinite(X0)):
        raise DimensionError("X0 contains NaN or Inf entries")
    if X0.size == 0 or not np.any(X0):
        raise RankError("X0 is all zero; no meaningful subspace")
    u, sigma, vh = sla.svd(X0, full_matrices=False)
    if sigma[0] == 0.0:
        raise RankError("X0 is all zero; no meaningful subspace")
    return u, sigma, vh


def truncated_svd(X0: np.ndarray, policy: RankPolicy) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-``r`` SVD ``X0 ~ W_r diag(sigma_r) V_r^T``.

    Returns:
        ``(W_r, sigma_r, V_r)`` with ``sigma_r`` as a length-r vector.
    """
    u, sigma, vh = _svd(X0)
    rank = _effective_rank(sigma, policy)
    return u[:, :rank], sigma[:rank], vh[:rank].T


def reduced_operator(W_r: np.ndarray, sigma_r: np.ndarray, V_r: np.ndarray, X1: np.ndarray,
                     floor: Optional[float] = None) -> np.ndarray:
    """``A_r = W_r^T X1 V_r diag(sigma_r)^-1``.

    ``floor`` is the relative singular-value floor the truncation used;
    it defaults to ``settings.numerics.sigma_rel_floor``.
    """
    floor = settings.numerics.sigma_rel_floor if floor is None else floor
    sigma_r = np.asarray(sigma_r, dtype=np.float64).ravel()
    if W_r.shape[1] != sigma_r.shape[0] or V_r.shape[1] != sigma_r.shape[0]:
        raise DimensionError("W_r, sigma_r and V_r disagree on the rank")
    if X1.shape != (W_r.shape[0], V_r.shape[0]):
        raise DimensionError(f"X1 has shape {X1.shape}, expected {(W_r.shape[0], V_r.shape[0])}")
    if sigma_r.size == 0 or np.min(sigma_r) <= 0.0 or \
            np.min(sigma_r) / np.max(sigma_r) < floor:
        raise SingularityError("Singular values below the floor must be filtered before inversion")
    return (W_r.conj().T @ X1 @ V_r) / sigma_r


def _eigen_order(eigenvalues: np.ndarray) -> np.ndarray:
    """Descending |lambda|, then descending real part, then ascending imaginary part."""
    modulus = np.round(np.abs(eigenvalues), 12)
    real = np.round(eigenvalues.real, 12)
    return np.lexsort((eigenvalues.imag, -real, -modulus))


def _subspace_gap(modes: np.ndarray, W_r: np.ndarray) -> float:
    """Spectral distance between the projectors onto span(modes) and span(W_r)."""
    q, r_factor = np.linalg.qr(modes)
    diag = np.abs(np.diag(r_factor))
    if diag.size == 0 or np.min(diag) <= np.finfo(np.float64).eps * modes.shape[0] * np.max(diag):
        return 1.0
    leftover = q - W_r @ (W_r.conj().T @ q)
    return float(sla.svdvals(leftover)[0]) if leftover.size else 0.0


def dmd_decompose(snap: SnapshotMatrix, policy: RankPolicy) -> DmdModel:
    """Compute DMD modes and eigenvalues of a snapshot matrix.

    Modes are ``Phi = W_r Y`` with unit 2-norm columns where
    ``A_r Y = Y Lambda``. An ill-conditioned eigenvector matrix is recorded
    as a warning on the model rather than raised.
    """
    X0, X1 = split_pair(snap)
    u, sigma, vh = _svd(X0)
    rank = _effective_rank(sigma, policy)
    W_r, sigma_r, V_r = u[:, :rank], sigma[:rank], vh[:rank].T

    A_r = reduced_operator(W_r, sigma_r, V_r, X1, floor=policy.sigma_rel_floor)
    eigenvalues, Y = sla.eig(A_r)

    order = _eigen_order(eigenvalues)
    eigenvalues = eigenvalues[order]
    Y = Y[:, order]

    modes = W_r @ Y
    norms = np.linalg.norm(modes, axis=0)
    modes = modes / np.where(norms > 0.0, norms, 1.0)

    warnings = []
    condition = np.linalg.cond(Y)
    if not np.isfinite(condition) or condition > settings.numerics.eig_condition_warning:
        message = f"reduced operator is defective or nearly so (eigenvector condition {condition:.3e})"
        warnings.append(message)
        logger.warning(f"{getattr(snap, 'label', '') or 'snapshots'}: {message}")

    energy = float(np.sum(sigma_r ** 2) / np.sum(sigma ** 2))
    gap = _subspace_gap(modes, W_r)
    logger.debug(f"DMD of {getattr(snap, 'label', '') or 'snapshots'}: rank {rank}, "
                 f"energy {energy:.6f}, subspace gap {gap:.2e}")

    dt = snap.dt if isinstance(snap, SnapshotMatrix) else 1.0
    return DmdModel(modes, eigenvalues, sigma, dt, energy, gap, tuple(warnings))
