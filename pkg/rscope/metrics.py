"""
Library diagnostics: subspace alignment, average alignment, data energy,
block coherence, the classification certificate and Monte-Carlo
confusion matrices.
"""
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import settings
from rscope.classify import classify
from rscope.exceptions import ArgumentError, DimensionError
from rscope.library import observe_library
from rscope.linalg import normalize_columns, orthonormal_basis, spectral_norm
from rscope.models import (
    CoherenceReport, ConfusionMatrix, Measurement, MetricMatrix, ObservedLibrary, RegimeLibrary,
    SensingOperator, SnapshotMatrix,
)
from rscope.sensing import derive_trial_seed, measure
from utils.csv_writer import CSVWriter
from utils.logger import logger
from utils.progress_tracker import TrialProgressTracker

BasesLike = Union[RegimeLibrary, ObservedLibrary, Sequence[np.ndarray]]


def _resolve_bases(bases: BasesLike) -> Tuple[List[np.ndarray], Tuple[str, ...], str]:
    """Raw basis matrices, labels and the space they live in."""
    if isinstance(bases, RegimeLibrary):
        return [entry.model.modes for entry in bases], tuple(bases.labels), "full"
    if isinstance(bases, ObservedLibrary):
        return list(bases.thetas), bases.labels, "observed"
    matrices = [np.asarray(basis) for basis in bases]
    matrices = [basis[:, np.newaxis] if basis.ndim == 1 else basis for basis in matrices]
    return matrices, tuple(f"R{index + 1}" for index in range(len(matrices))), "full"


def _orthonormalize(matrices: Sequence[np.ndarray], labels: Sequence[str]) -> Tuple[List[np.ndarray], List[str]]:
    if not matrices:
        raise ArgumentError("At least one basis is required")
    rows = {matrix.shape[0] for matrix in matrices}
    if len(rows) != 1:
        raise DimensionError(f"Bases live in spaces of different dimension: {sorted(rows)}")
    qs, flags = [], []
    for label, matrix in zip(labels, matrices):
        q, rank = orthonormal_basis(matrix)
        if rank < matrix.shape[1]:
            flags.append(f"rank-deficient basis {label}: rank {rank} < {matrix.shape[1]}")
        qs.append(q)
    return qs, flags


def _pair_values(qs: Sequence[np.ndarray], pair_value, diagonal: Optional[float]) -> np.ndarray:
    """Symmetric d x d matrix from the upper triangle of ``pair_value``."""
    d = len(qs)
    values = np.zeros((d, d))
    for i in range(d):
        for k in range(i, d):
            if i == k and diagonal is not None:
                values[i, i] = diagonal
                continue
            values[i, k] = values[k, i] = pair_value(qs[i], qs[k])
    return values


def eta_alignment(bases: BasesLike) -> Tuple[MetricMatrix, float]:
    """Pairwise subspace alignment ``||P_j P_k||_2`` and its off-diagonal maximum."""
    matrices, labels, space = _resolve_bases(bases)
    qs, flags = _orthonormalize(matrices, labels)

    def alignment(qa, qb):
        if qa.shape[1] == 0 or qb.shape[1] == 0:
            return 0.0
        return min(1.0, spectral_norm(qa.conj().T @ qb))

    values = _pair_values(qs, alignment, None)
    d = len(qs)
    eta = float(np.max(values[~np.eye(d, dtype=bool)])) if d > 1 else 0.0
    return MetricMatrix(values, "eta", space, labels, tuple(flags)), eta


def gamma_matrix(bases: BasesLike) -> MetricMatrix:
    """Average alignment ``||P_i P_j||_F / sqrt(||P_i||_F ||P_j||_F)``.

    ``||P_i||_F = sqrt(r_i)``, so the diagonal is exactly one and two lines
    at angle theta give ``|cos theta|``.
    """
    matrices, labels, space = _resolve_bases(bases)
    qs, flags = _orthonormalize(matrices, labels)

    def average(qa, qb):
        if qa.shape[1] == 0 or qb.shape[1] == 0:
            return 0.0
        overlap = np.linalg.norm(qa.conj().T @ qb, "fro")
        return float(overlap / (qa.shape[1] * qb.shape[1]) ** 0.25)

    values = _pair_values(qs, average, 1.0)
    return MetricMatrix(values, "gamma", space, labels, tuple(flags))


def kappa_matrix(bases: BasesLike, datasets: Sequence[Union[SnapshotMatrix, np.ndarray]]) -> MetricMatrix:
    """Share of each dataset's energy captured by each subspace.

    ``values[i, j] = ||P_i X_j||_F / ||X_j||_F``.
    """
    matrices, labels, space = _resolve_bases(bases)
    qs, flags = _orthonormalize(matrices, labels)
    data = [snap.data if isinstance(snap, SnapshotMatrix) else np.asarray(snap) for snap in datasets]
    if len(data) != len(qs):
        raise ArgumentError(f"{len(qs)} bases but {len(data)} datasets")

    values = np.zeros((len(qs), len(data)))
    for j, X in enumerate(data):
        if X.ndim == 1:
            X = X[:, np.newaxis]
        if X.shape[0] != qs[0].shape[0]:
            raise DimensionError(f"Dataset {j} has dimension {X.shape[0]}, bases have {qs[0].shape[0]}")
        energy = np.linalg.norm(X, "fro")
        if energy == 0.0:
            raise ArgumentError(f"Dataset {labels[j]} is all zero; kappa is undefined")
        for i, q in enumerate(qs):
            values[i, j] = min(1.0, np.linalg.norm(q.conj().T @ X, "fro") / energy)
    return MetricMatrix(values, "kappa", space, labels, tuple(flags))


def coherence_from_blocks(blocks: Sequence[np.ndarray]) -> CoherenceReport:
    """Block coherence and sub-coherence of a dictionary of equally sized blocks."""
    if not blocks:
        raise ArgumentError("At least one block is required")
    sizes = {block.shape[1] for block in blocks}
    if len(sizes) != 1:
        raise ArgumentError(f"Block coherence requires equal block sizes, got {sorted(sizes)}")
    r_block = sizes.pop()
    if r_block == 0:
        raise ArgumentError("Blocks must have at least one column")

    normalized = [normalize_columns(np.asarray(block, dtype=np.complex128)) for block in blocks]
    d = len(normalized)

    mu_b = 0.0
    for i in range(d):
        for k in range(i + 1, d):
            mu_b = max(mu_b, spectral_norm(normalized[i].conj().T @ normalized[k]) / r_block)

    nu = 0.0
    if r_block > 1:
        off_diagonal = ~np.eye(r_block, dtype=bool)
        for block in normalized:
            gram = np.abs(block.conj().T @ block)
            nu = max(nu, float(np.max(gram[off_diagonal])))
    nu = min(nu, 1.0)

    denominator = mu_b + nu
    bound = (1.0 + nu) / denominator if denominator > 0.0 else float("inf")
    total = d * r_block
    return CoherenceReport(float(mu_b), float(nu), r_block, d, float(bound), bool(total < bound))


def coherence_report(obs: ObservedLibrary) -> CoherenceReport:
    """Coherence of an observed library; see :func:`coherence_from_blocks`."""
    return coherence_from_blocks(obs.thetas)


def library_epsilon(bases: BasesLike, samples: Sequence[Union[SnapshotMatrix, np.ndarray]]) -> float:
    """Largest :func:`estimate_epsilon` over regimes, pairing ``samples[k]`` with basis ``k``."""
    matrices, _, _ = _resolve_bases(bases)
    data = [snap.data if isinstance(snap, SnapshotMatrix) else np.asarray(snap) for snap in samples]
    if len(data) != len(matrices):
        raise ArgumentError(f"{len(matrices)} bases but {len(data)} sample sets")
    return max(estimate_epsilon(basis, X) for basis, X in zip(matrices, data))


def prop1_certificate(bases: BasesLike, epsilon: Optional[float] = None,
                      samples: Optional[Sequence[Union[SnapshotMatrix, np.ndarray]]] = None) -> Tuple[bool, float]:
    """Whether ``eta < 1 - epsilon`` guarantees correct classification.

    Without ``epsilon`` it is estimated from ``samples`` (one sample set
    per basis) with :func:`library_epsilon`; an estimate of one or more
    certifies nothing.
    """
    if epsilon is None:
        if samples is None:
            raise ArgumentError("prop1_certificate needs epsilon or sample data to estimate it")
        epsilon = library_epsilon(bases, samples)
    elif not (0.0 <= epsilon < 1.0):
        raise ArgumentError(f"epsilon must lie in [0, 1), got {epsilon}")
    _, eta = eta_alignment(bases)
    return bool(epsilon < 1.0 and eta < 1.0 - epsilon), eta


def estimate_epsilon(basis: np.ndarray, samples: np.ndarray) -> float:
    """Largest ``||(I - P) y|| / ||P y||`` over the sample columns."""
    q, _ = orthonormal_basis(np.asarray(basis))
    samples = np.asarray(samples)
    if samples.ndim == 1:
        samples = samples[:, np.newaxis]
    if samples.shape[0] != q.shape[0]:
        raise DimensionError(f"Samples have dimension {samples.shape[0]}, basis has {q.shape[0]}")
    projected = q @ (q.conj().T @ samples)
    inside = np.linalg.norm(projected, axis=0)
    outside = np.linalg.norm(samples - projected, axis=0)
    if np.any((inside == 0.0) & (outside > 0.0)):
        return float("inf")
    nonzero = inside > 0.0
    if not np.any(nonzero):
        return 0.0
    return float(np.max(outside[nonzero] / inside[nonzero]))


def nearest_regimes(held_out: BasesLike, library: BasesLike) -> List[int]:
    """Index of the most aligned library subspace for each held-out subspace."""
    held, held_labels, _ = _resolve_bases(held_out)
    known, known_labels, _ = _resolve_bases(library)
    held_q, _ = _orthonormalize(held, held_labels)
    known_q, _ = _orthonormalize(known, known_labels)
    if held_q[0].shape[0] != known_q[0].shape[0]:
        raise DimensionError("Held-out and library bases live in different spaces")

    nearest = []
    for q in held_q:
        scores = [spectral_norm(q.conj().T @ other) for other in known_q]
        nearest.append(int(np.argmax(scores)))
    return nearest


def draw_trial(C: SensingOperator, snap: SnapshotMatrix, j: int, snr_db: Optional[float],
               seed: int, row: int, trial: int) -> Tuple[int, Measurement]:
    """Start time and measurement of one Monte-Carlo trial.

    The start is uniform over positions leaving ``j+1`` snapshots; start
    and noise both come from ``derive_trial_seed(seed, row, trial)``.
    """
    if snap.s < j + 1:
        raise ArgumentError(f"Test set {snap.label} has {snap.s} snapshots, needs at least {j + 1}")
    rng = np.random.default_rng(derive_trial_seed(seed, row, trial))
    start = int(rng.integers(0, snap.s - j))
    noise_seed = int(rng.integers(0, 2 ** 63 - 1))
    return start, measure(C, snap.window(start, j + 1), snr_db, noise_seed)


def _confusion_row(obs: ObservedLibrary, C: SensingOperator, snap: SnapshotMatrix, row: int,
                   trials: int, snr_db: Optional[float], j: int, seed: int,
                   tracker: TrialProgressTracker) -> np.ndarray:
    counts = np.zeros(len(obs))
    for trial in range(trials):
        _, y = draw_trial(C, snap, j, snr_db, seed, row, trial)
        winner = classify(obs, y).winner
        counts[winner] += 1
        expected = obs.labels.index(snap.label) if snap.label in obs.labels else None
        tracker.update(1, failed=int(expected is not None and winner != expected))
    return counts / trials * 100.0


def confusion_matrix(lib: RegimeLibrary, obs: Optional[ObservedLibrary],
                     test_data: Union[Sequence[SnapshotMatrix], Mapping[str, SnapshotMatrix]],
                     trials: int, snr_db: Optional[float], j: int, seed: int,
                     sensing: Optional[SensingOperator] = None,
                     threads: Optional[int] = None) -> ConfusionMatrix:
    """Percentage of trials from each test set assigned to each library regime.

    Rows follow ``test_data`` (labels may be absent from the library for
    held-out experiments), columns follow the library. Every trial draws a
    start time and noise from ``seed XOR (row * 10**6 + trial)``.
    """
    if trials < 1:
        raise ArgumentError(f"trials must be >= 1, got {trials}")
    if int(j) != j or j < 0:
        raise ArgumentError(f"Augmentation depth must be a nonnegative integer, got {j}")
    j = int(j)

    if obs is None:
        if sensing is None:
            raise ArgumentError("confusion_matrix needs an observed library or a sensing operator")
        obs = observe_library(lib, sensing, j)
    elif obs.depth != j:
        raise ArgumentError(f"Observed library was built with j={obs.depth}, requested j={j}")
    C = obs.sensing if obs.sensing is not None else sensing
    if C is None:
        raise ArgumentError("Observed library carries no sensing operator")

    if isinstance(test_data, Mapping):
        tests = [snap if snap.label == label else SnapshotMatrix(snap.data, snap.dt, snap.grid, label)
                 for label, snap in test_data.items()]
    else:
        tests = list(test_data)
    if not tests:
        raise ArgumentError("No test data supplied")
    for snap in tests:
        if snap.s < j + 1:
            raise ArgumentError(f"Test set {snap.label} has {snap.s} snapshots, needs at least {j + 1}")
        lib.check_snapshots(snap)

    workers = max(1, threads if threads is not None else settings.compute.threads)
    started = time.time()
    tracker = TrialProgressTracker(f"confusion j={j}", trials * len(tests))
    try:
        def run(row: int) -> np.ndarray:
            return _confusion_row(obs, C, tests[row], row, trials, snr_db, j, seed, tracker)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(run, range(len(tests))))
        else:
            rows = [run(row) for row in range(len(tests))]
    finally:
        tracker.finish(time.time() - started)

    matrix = ConfusionMatrix(np.vstack(rows), tuple(snap.label for snap in tests), obs.labels,
                             trials, snr_db, j)
    logger.info(f"Confusion matrix (j={j}, snr={snr_db}): accuracy "
                + ", ".join(f"{label}={value:.1f}%" for label, value in matrix.accuracy().items()))
    return matrix


def mu_b_vs_augmentation(lib: RegimeLibrary, C: SensingOperator,
                         j_range: Sequence[int]) -> List[Tuple[int, float]]:
    """Block coherence of the observed library for every depth in ``j_range``."""
    sizes = set(lib.ranks)
    if len(sizes) != 1:
        raise ArgumentError(f"Block coherence requires equal regime ranks, got {sorted(sizes)}")
    sweep = []
    for j in j_range:
        report = coherence_report(observe_library(lib, C, int(j)))
        logger.debug(f"mu_B(j={j}) = {report.mu_b:.6f}")
        sweep.append((int(j), report.mu_b))
    return sweep


def write_metric_csv(metric: MetricMatrix, path: str) -> str:
    """Write a metric matrix with regime labels on both axes."""
    directory, name = os.path.split(path)
    writer = CSVWriter(directory or ".")
    return writer.write_matrix(name, metric.values, metric.labels, metric.labels)
