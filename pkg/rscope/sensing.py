"""
Measurement operators, the block-diagonal time lift and SNR-calibrated
measurements.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import sparse

from config.settings import settings
from rscope.exceptions import ArgumentError, DegenerateSignalError, DimensionError
from rscope.models import FieldGrid, Measurement, SensingOperator, SnapshotMatrix
from utils.logger import logger


@dataclass
class SensingConfig:
    """Parameters for :func:`make_sensing`.

    ``per_field_counts`` maps a field name, or ``"velocity"`` for all
    velocity fields together, to a sensor count (boundary kind only).
    """
    p: Optional[int] = None
    n: Optional[int] = None
    grid: Optional[FieldGrid] = None
    seed: Optional[int] = None
    boundary_offset: int = field(default_factory=lambda: settings.sensing.boundary_offset)
    per_field_counts: Dict[str, int] = field(default_factory=dict)
    indices: Optional[Sequence[int]] = None


def _rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


def _state_dim(config: SensingConfig) -> int:
    if config.n is not None and config.grid is not None and config.n != config.grid.state_dim:
        raise DimensionError(f"n={config.n} disagrees with grid state dimension {config.grid.state_dim}")
    if config.n is not None:
        n = int(config.n)
    elif config.grid is not None:
        n = config.grid.state_dim
    else:
        raise ArgumentError("Sensing configuration needs n or a grid")
    if n < 1:
        raise ArgumentError(f"State dimension must be positive, got {n}")
    return n


def _selection_matrix(indices: Sequence[int], n: int) -> np.ndarray:
    matrix = np.zeros((len(indices), n))
    matrix[np.arange(len(indices)), np.asarray(indices, dtype=int)] = 1.0
    return matrix


def ring_nodes(grid: FieldGrid, layer: int) -> np.ndarray:
    """Node indices (within one field block) exactly ``layer`` steps inside the boundary."""
    ix, iy = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="xy")
    depth = np.minimum.reduce([ix, iy, grid.nx - 1 - ix, grid.ny - 1 - iy])
    return np.flatnonzero(depth.ravel() == layer)


def _boundary_rows(config: SensingConfig) -> List[int]:
    grid = config.grid
    if grid is None:
        raise ArgumentError("boundary sensing requires a grid")
    if config.boundary_offset < 0:
        raise ArgumentError(f"boundary_offset must be nonnegative, got {config.boundary_offset}")

    velocity = [name for name in grid.fields if name in settings.sensing.velocity_fields]
    counts = dict(config.per_field_counts)
    if not counts:
        if config.p is None:
            raise ArgumentError("boundary sensing needs p or per_field_counts")
        counts = {grid.fields[0]: int(config.p)}

    rng = _rng(config.seed)
    rows: List[int] = []
    # stacking order: named fields first, the joint velocity pool last
    order = {key: (len(grid.fields) if key == "velocity" else grid.field_index(key)) for key in counts}
    for key in sorted(counts, key=lambda k: (order[k], k)):
        count = int(counts[key])
        if count < 0:
            raise ArgumentError(f"Sensor count for '{key}' must be nonnegative, got {count}")
        if count == 0:
            continue
        if key == "velocity":
            if not velocity:
                raise ArgumentError(f"Grid has no velocity fields among {list(grid.fields)}")
            targets = velocity
        else:
            targets = [key]

        candidates = []
        for name in targets:
            layer = config.boundary_offset if name in velocity else 0
            offset = grid.field_index(name) * grid.nodes
            candidates.append(ring_nodes(grid, layer) + offset)
        candidates = np.concatenate(candidates)
        if count > candidates.shape[0]:
            raise ArgumentError(
                f"Requested {count} sensors for '{key}' but only {candidates.shape[0]} eligible nodes exist"
            )
        chosen = rng.choice(candidates, size=count, replace=False)
        rows.extend(int(index) for index in chosen)

    if config.p is not None and config.per_field_counts and len(rows) != int(config.p):
        raise ArgumentError(f"per_field_counts sum to {len(rows)} but p={config.p}")
    return rows


def _tomographic_matrix(config: SensingConfig, n: int) -> np.ndarray:
    grid = config.grid
    if grid is None:
        raise ArgumentError("tomographic sensing requires a grid")
    lines = []
    for name in grid.fields:
        offset = grid.field_index(name) * grid.nodes
        for iy in range(grid.ny):
            lines.append(offset + iy * grid.nx + np.arange(grid.nx))
        for ix in range(grid.nx):
            lines.append(offset + np.arange(grid.ny) * grid.nx + ix)

    if config.p is not None:
        if not (1 <= config.p <= len(lines)):
            raise ArgumentError(f"tomographic sensing has {len(lines)} lines, requested p={config.p}")
        picked = np.sort(_rng(config.seed).choice(len(lines), size=int(config.p), replace=False))
        lines = [lines[index] for index in picked]

    matrix = np.zeros((len(lines), n))
    for row, nodes in enumerate(lines):
        matrix[row, nodes] = 1.0
    return matrix


def make_sensing(kind: str, config: SensingConfig) -> SensingOperator:
    """Construct a measurement operator of the given kind."""
    if kind not in SensingOperator.KINDS:
        raise ArgumentError(f"Unknown sensing kind '{kind}'. Available: {list(SensingOperator.KINDS)}")
    n = _state_dim(config)
    p = config.p

    if kind == "identity":
        operator = SensingOperator(np.eye(n), kind, config.seed)

    elif kind == "point":
        if config.indices is not None:
            indices = [int(i) for i in config.indices]
            if any(i < 0 or i >= n for i in indices):
                raise ArgumentError(f"Point sensor indices must lie in [0, {n})")
            if len(set(indices)) != len(indices):
                raise ArgumentError("Point sensor indices must be distinct")
            if p is not None and p != len(indices):
                raise ArgumentError(f"p={p} but {len(indices)} indices were given")
        else:
            if p is None or not (1 <= p <= n):
                raise ArgumentError(f"point sensing needs 1 <= p <= n={n}, got p={p}")
            indices = [int(i) for i in _rng(config.seed).choice(n, size=int(p), replace=False)]
        operator = SensingOperator(_selection_matrix(indices, n), kind, config.seed, tuple(indices))

    elif kind == "boundary":
        rows = _boundary_rows(config)
        if not rows:
            raise ArgumentError("boundary sensing selected no sensors")
        operator = SensingOperator(_selection_matrix(rows, n), kind, config.seed, tuple(rows))

    elif kind == "gaussian":
        if p is None or p < 1:
            raise ArgumentError(f"gaussian sensing needs p >= 1, got {p}")
        matrix = _rng(config.seed).normal(0.0, 1.0 / np.sqrt(p), size=(int(p), n))
        operator = SensingOperator(matrix, kind, config.seed)

    elif kind == "bernoulli":
        if p is None or p < 1:
            raise ArgumentError(f"bernoulli sensing needs p >= 1, got {p}")
        signs = _rng(config.seed).integers(0, 2, size=(int(p), n)) * 2.0 - 1.0
        operator = SensingOperator(signs / np.sqrt(p), kind, config.seed)

    else:
        operator = SensingOperator(_tomographic_matrix(config, n), kind, config.seed)

    logger.debug(f"Built {kind} sensing operator: p={operator.p}, n={operator.n}, seed={config.seed}")
    return operator


def block_diag_lift(C: SensingOperator, j: int) -> sparse.csr_matrix:
    """``blkdiag(C, ..., C)`` with ``j+1`` copies, as a sparse CSR matrix."""
    if int(j) != j or j < 0:
        raise ArgumentError(f"Augmentation depth must be a nonnegative integer, got {j}")
    matrix = C.matrix if isinstance(C, SensingOperator) else np.asarray(C, dtype=np.float64)
    return sparse.block_diag([sparse.csr_matrix(matrix)] * (int(j) + 1), format="csr")


def sensed_windows(C: SensingOperator, snap, j: int) -> np.ndarray:
    """Clean measurements of every window of ``j+1`` consecutive snapshots.

    Column ``t`` is ``blkdiag(C, ..., C) [x(t); ...; x(t+j)]``, the
    noiseless counterpart of :func:`measure` started at ``t``.
    """
    lift = block_diag_lift(C, j)
    j = int(j)
    states = snap.data if isinstance(snap, SnapshotMatrix) else np.asarray(snap, dtype=np.float64)
    if states.ndim != 2 or states.shape[0] != C.n:
        raise DimensionError(f"Snapshots have {states.shape[0] if states.ndim else 0} rows, operator expects {C.n}")
    s = states.shape[1]
    if s < j + 1:
        raise ArgumentError(f"{s} snapshots cannot fill a window of {j + 1}")
    stacked = np.vstack([states[:, b:s - j + b] for b in range(j + 1)])
    return np.asarray(lift @ stacked)


def derive_trial_seed(seed: int, regime: int, trial: int) -> int:
    """Per-trial seed ``seed XOR (regime * 10**6 + trial)``."""
    return int(seed) ^ (int(regime) * 1_000_000 + int(trial))


def measure(C: SensingOperator, snapshots, snr_db: Optional[float] = None,
            seed: Optional[int] = None) -> Measurement:
    """Stack ``C x(t+b)`` for every supplied snapshot and optionally add noise.

    Noise is i.i.d. Gaussian rescaled so that ``||noise|| / ||y|| = 10**(-snr_db/20)``
    holds exactly.

    Args:
        C: sensing operator.
        snapshots: ``n x (j+1)`` array (or SnapshotMatrix) of consecutive states.
        snr_db: signal-to-noise ratio in dB, or None for clean measurements.
        seed: noise seed.
    """
    states = snapshots.data if isinstance(snapshots, SnapshotMatrix) else np.asarray(snapshots, dtype=np.float64)
    if states.ndim == 1:
        states = states[:, np.newaxis]
    if states.ndim != 2 or states.shape[0] != C.n:
        raise DimensionError(f"Snapshots have {states.shape[0] if states.ndim else 0} rows, operator expects {C.n}")

    clean = (C.matrix @ states).ravel(order="F")
    depth = states.shape[1] - 1
    if snr_db is None:
        return Measurement(clean, depth, None, seed, 0.0)

    if not np.isfinite(snr_db):
        raise ArgumentError(f"snr_db must be finite, got {snr_db}")
    signal = np.linalg.norm(clean)
    if signal == 0.0:
        raise DegenerateSignalError("Cannot calibrate noise against a zero signal")

    noise = _rng(seed).standard_normal(clean.shape[0])
    fraction = 10.0 ** (-float(snr_db) / 20.0)
    noise *= fraction * signal / np.linalg.norm(noise)
    return Measurement(clean + noise, depth, float(snr_db), seed, fraction)


def export_sensing_csv(op: SensingOperator, path: str) -> str:
    """Write the operator as a CSV (one row per sensor, one column per state entry)."""
    frame = pd.DataFrame(op.matrix, columns=[f"x{index}" for index in range(op.n)])
    frame.insert(0, "sensor", np.arange(op.p))
    frame.to_csv(path, index=False, float_format="%.17g",
                 lineterminator=settings.output.csv_lineterminator)
    return path
