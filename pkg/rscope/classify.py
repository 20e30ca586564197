"""
Least-squares projection classification and full-state reconstruction.
"""
from typing import Optional, Tuple, Union

import numpy as np

from rscope.exceptions import ArgumentError, DimensionError
from rscope.library import augment_basis
from rscope.linalg import rank_revealing_pinv
from rscope.models import (
    ClassificationReport, Measurement, ObservedLibrary, Reconstruction, RegimeLibrary,
)
from utils.logger import logger

MeasurementLike = Union[Measurement, np.ndarray]


def _values(y: MeasurementLike) -> np.ndarray:
    values = y.values if isinstance(y, Measurement) else np.asarray(y)
    return values.ravel()


def lsq_fit(theta: np.ndarray, y: MeasurementLike,
            pinv: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """Minimum-norm least-squares coefficients and residual norm.

    Args:
        theta: observed basis (m x r).
        y: measurement of length m.
        pinv: cached pseudoinverse of ``theta``; computed when omitted.

    Returns:
        ``(beta, ||y - theta beta||)``
    """
    theta = np.asarray(theta)
    values = _values(y)
    if theta.ndim != 2 or values.shape[0] != theta.shape[0]:
        raise ArgumentError(f"Measurement length {values.shape[0]} does not match basis rows {theta.shape[0]}")
    if pinv is None:
        pinv, _, _, _ = rank_revealing_pinv(theta)
    beta = pinv @ values
    residual = float(np.linalg.norm(values - theta @ beta))
    return beta, residual


def classify(obs: ObservedLibrary, y: MeasurementLike) -> ClassificationReport:
    """Pick the regime whose observed span captures the most of ``y``.

    Ties in projection norm go to the lowest regime index.
    """
    if len(obs) == 0:
        raise ArgumentError("Cannot classify against an empty library")
    values = _values(y)
    if values.shape[0] != obs.measurement_dim:
        raise ArgumentError(
            f"Measurement length {values.shape[0]} does not match observed library "
            f"length {obs.measurement_dim} (p(j+1) with j={obs.depth})"
        )

    norms = np.empty(len(obs))
    residuals = np.empty(len(obs))
    coefficients = []
    for k, (theta, pinv) in enumerate(zip(obs.thetas, obs.pinvs)):
        beta = pinv @ values
        projection = theta @ beta
        norms[k] = np.linalg.norm(projection)
        residuals[k] = np.linalg.norm(values - projection)
        coefficients.append(beta)

    winner = int(np.argmax(norms))
    flags = tuple(flag for flag in obs.flags if flag)
    return ClassificationReport(winner, obs.labels, norms, residuals, coefficients[winner], flags)


def reconstruct(lib: RegimeLibrary, obs: ObservedLibrary, k: int, y: MeasurementLike) -> Reconstruction:
    """Estimate ``x(t..t+j)`` from measurements using regime ``k``.

    The coefficients come from the augmented observed basis, and the
    returned states are the real part of ``Phi_hat beta``.
    """
    if not (0 <= k < len(lib)) or k >= len(obs):
        raise ArgumentError(f"Regime index {k} outside 0..{min(len(lib), len(obs)) - 1}")
    if lib.labels[k] != obs.labels[k]:
        raise DimensionError(f"Library regime {lib.labels[k]} does not match observed regime {obs.labels[k]}")

    beta, _ = lsq_fit(obs.thetas[k], y, obs.pinvs[k])
    augmented = augment_basis(lib.entries[k], obs.depth)
    estimate = augmented.matrix @ beta

    total = np.linalg.norm(estimate)
    imag_residual = float(np.linalg.norm(estimate.imag) / total) if total > 0.0 else 0.0
    if imag_residual > 1e-6:
        logger.debug(f"Reconstruction with {lib.labels[k]} has imaginary residual {imag_residual:.3e}")

    states = estimate.real.reshape((lib.state_dim, obs.depth + 1), order="F")
    flags = (obs.flags[k],) if obs.flags[k] else ()
    return Reconstruction(states, k, imag_residual, flags)


def relative_error(truth: np.ndarray, estimate: np.ndarray) -> float:
    """``||truth - estimate|| / ||truth||`` (Frobenius for matrices)."""
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise DimensionError(f"Shapes differ: {truth.shape} vs {estimate.shape}")
    scale = np.linalg.norm(truth)
    if scale == 0.0:
        raise ArgumentError("Relative error is undefined for a zero reference")
    return float(np.linalg.norm(truth - estimate) / scale)
