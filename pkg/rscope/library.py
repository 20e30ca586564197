"""
Regime library: build from snapshot datasets, time-augment, observe
through a sensing operator, and persist to disk.

On-disk layout (one directory per library)::

    manifest.json        format version, n, dt, grid, entry list
    regime_<i>.rmod      modes and spectrum of entry i

``.rmod`` layout (little-endian)::

    "RMOD" | u32 version=1 | u64 n | u64 r
    n*r complex modes as interleaved f64 pairs, column-major
    r complex eigenvalues as interleaved f64 pairs
    u64 count | count f64 singular values
    f64 dt | f64 energy_captured | f64 subspace_gap
"""
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from dataclasses_json import dataclass_json

from config.settings import settings
from rscope.dmd import dmd_decompose
from rscope.exceptions import (
    ArgumentError, DimensionError, FormatError, LibraryVersionError,
)
from rscope.models import (
    AugmentedBasis, DmdModel, FieldGrid, ObservedLibrary, RankPolicy,
    RegimeEntry, RegimeLibrary, SensingOperator, SnapshotMatrix,
)
from utils.logger import logger

LIBRARY_FORMAT_VERSION = "1.0"
MANIFEST_NAME = "manifest.json"
MODE_MAGIC = b"RMOD"
MODE_VERSION = 1

_MODE_HEADER = struct.Struct("<4sIQQ")
_COUNT = struct.Struct("<Q")
_TRAILER = struct.Struct("<ddd")

Dataset = Tuple[str, float, SnapshotMatrix]


@dataclass_json
@dataclass
class GridManifest:
    nx: int
    ny: int
    fields: List[str]
    field_scales: List[float]


@dataclass_json
@dataclass
class EntryManifest:
    label: str
    parameter: float
    rank: int
    file: str
    warnings: List[str] = field(default_factory=list)


@dataclass_json
@dataclass
class LibraryManifest:
    format_version: str
    state_dim: int
    dt: float
    entries: List[EntryManifest]
    grid: Optional[GridManifest] = None


def build_library(datasets: Sequence[Dataset], policy: RankPolicy,
                  threads: Optional[int] = None) -> RegimeLibrary:
    """Decompose every dataset and collect the models in input order.

    Args:
        datasets: ``(label, parameter, SnapshotMatrix)`` triples.
        policy: truncation rule shared by all regimes.
        threads: worker count (defaults to ``settings.compute.threads``).
    """
    datasets = list(datasets)
    if not datasets:
        raise ArgumentError("build_library needs at least one dataset")

    labels = [label for label, _, _ in datasets]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ArgumentError(f"Duplicate regime labels: {duplicates}")

    _, _, first = datasets[0]
    for label, _, snap in datasets[1:]:
        if snap.n != first.n:
            raise DimensionError(f"Dataset {label} has n={snap.n}, expected {first.n}")
        if not np.isclose(snap.dt, first.dt, rtol=1e-12, atol=0.0):
            raise DimensionError(f"Dataset {label} has dt={snap.dt}, expected {first.dt}")

    workers = max(1, threads if threads is not None else settings.compute.threads)
    logger.info(f"Building library of {len(datasets)} regimes with {policy.describe()} "
                f"({workers} worker{'s' if workers > 1 else ''})")

    snaps = [snap for _, _, snap in datasets]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(lambda snap: dmd_decompose(snap, policy), snaps))
    else:
        models = [dmd_decompose(snap, policy) for snap in snaps]

    entries = []
    for (label, parameter, _), model in zip(datasets, models):
        logger.debug(f"Regime {label}: r={model.rank}, energy {model.energy_captured:.6f}")
        entries.append(RegimeEntry(label, float(parameter), model))

    grids = {snap.grid for snap in snaps}
    grid = grids.pop() if len(grids) == 1 else None
    return RegimeLibrary(tuple(entries), first.n, first.dt, grid)


def _augmented_blocks(modes: np.ndarray, eigenvalues: np.ndarray, j: int) -> List[np.ndarray]:
    return [modes * eigenvalues[np.newaxis, :] ** b for b in range(j + 1)]


def augment_basis(entry: Union[RegimeEntry, DmdModel], j: int) -> AugmentedBasis:
    """Stack ``[Phi; Phi Lambda; ...; Phi Lambda^j]``."""
    if int(j) != j or j < 0:
        raise ArgumentError(f"Augmentation depth must be a nonnegative integer, got {j}")
    j = int(j)
    model = entry.model if isinstance(entry, RegimeEntry) else entry
    source = entry.label if isinstance(entry, RegimeEntry) else ""
    matrix = np.vstack(_augmented_blocks(model.modes, model.eigenvalues, j))
    return AugmentedBasis(matrix, j, source)


def observe_library(lib: RegimeLibrary, C: SensingOperator, j: int) -> ObservedLibrary:
    """Sensed augmented bases ``Theta_k = blkdiag(C) Phi_hat_k`` with cached pseudoinverses.

    Each block ``C Phi Lambda^b`` is formed as ``(C Phi) Lambda^b`` so the
    lifted operator is never materialised.
    """
    if int(j) != j or j < 0:
        raise ArgumentError(f"Augmentation depth must be a nonnegative integer, got {j}")
    if C.n != lib.state_dim:
        raise DimensionError(f"Sensing operator acts on n={C.n}, library has n={lib.state_dim}")

    blocks = []
    for entry in lib:
        sensed = C.matrix @ entry.model.modes
        blocks.append(np.vstack(_augmented_blocks(sensed, entry.model.eigenvalues, int(j))))

    obs = ObservedLibrary.from_blocks(blocks, lib.labels, int(j), C)
    for label, message in obs.flagged.items():
        logger.warning(message)
    logger.debug(f"Observed library: {len(obs)} regimes, measurement length {obs.measurement_dim}, j={j}")
    return obs


def _mode_file_name(index: int) -> str:
    return f"regime_{index}.rmod"


def _encode_model(model: DmdModel) -> bytes:
    parts = [
        _MODE_HEADER.pack(MODE_MAGIC, MODE_VERSION, model.state_dim, model.rank),
        np.asarray(model.modes, dtype="<c16").tobytes(order="F"),
        np.asarray(model.eigenvalues, dtype="<c16").tobytes(),
        _COUNT.pack(model.singular_values.shape[0]),
        np.asarray(model.singular_values, dtype="<f8").tobytes(),
        _TRAILER.pack(model.dt, model.energy_captured, model.subspace_gap),
    ]
    return b"".join(parts)


def _decode_model(path: str, payload: bytes, warnings: Sequence[str]) -> DmdModel:
    if len(payload) < _MODE_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, r = _MODE_HEADER.unpack_from(payload, 0)
    if magic != MODE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != MODE_VERSION:
        raise FormatError(f"{path}: unsupported mode file version {version}")

    offset = _MODE_HEADER.size
    try:
        modes_bytes = n * r * 16
        modes = np.frombuffer(payload, dtype="<c16", count=n * r, offset=offset).reshape((n, r), order="F")
        offset += modes_bytes
        eigenvalues = np.frombuffer(payload, dtype="<c16", count=r, offset=offset)
        offset += r * 16
        (count,) = _COUNT.unpack_from(payload, offset)
        offset += _COUNT.size
        singular_values = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        dt, energy, gap = _TRAILER.unpack_from(payload, offset)
        offset += _TRAILER.size
    except (ValueError, struct.error) as exc:
        raise FormatError(f"{path}: truncated mode file ({exc})")
    if offset != len(payload):
        raise FormatError(f"{path}: {len(payload) - offset} trailing bytes")

    return DmdModel(modes, eigenvalues, singular_values, dt, energy, gap, tuple(warnings))


def write_library(path: str, lib: RegimeLibrary) -> str:
    """Persist a library as ``manifest.json`` plus one ``.rmod`` file per regime."""
    os.makedirs(path, exist_ok=True)

    entries = []
    for index, entry in enumerate(lib):
        name = _mode_file_name(index)
        with open(os.path.join(path, name), "wb") as handle:
            handle.write(_encode_model(entry.model))
        entries.append(EntryManifest(entry.label, entry.parameter, entry.model.rank, name,
                                     list(entry.model.warnings)))

    grid = None
    if lib.grid is not None:
        grid = GridManifest(lib.grid.nx, lib.grid.ny, list(lib.grid.fields), list(lib.grid.field_scales))

    manifest = LibraryManifest(LIBRARY_FORMAT_VERSION, lib.state_dim, lib.dt, entries, grid)
    with open(os.path.join(path, MANIFEST_NAME), "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
        handle.write("\n")

    logger.info(f"Saved library of {len(lib)} regimes to {path}")
    return path


def _check_version(path: str, version: str):
    try:
        major = int(str(version).split(".")[0])
    except ValueError:
        raise FormatError(f"{path}: unreadable format version '{version}'")
    supported = int(LIBRARY_FORMAT_VERSION.split(".")[0])
    if major > supported:
        raise LibraryVersionError(
            f"{path}: library format {version} is newer than supported {LIBRARY_FORMAT_VERSION}"
        )
    if major < 1:
        raise FormatError(f"{path}: unsupported library format {version}")


def read_library(path: str) -> RegimeLibrary:
    """Load a library written by :func:`write_library`."""
    manifest_path = os.path.join(path, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise FormatError(f"{path}: missing {MANIFEST_NAME}")

    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, ValueError) as exc:
        raise FormatError(f"{manifest_path}: unreadable manifest ({exc})")
    if not isinstance(raw, dict):
        raise FormatError(f"{manifest_path}: manifest must be a JSON object")

    _check_version(manifest_path, raw.get("format_version", ""))
    try:
        manifest = LibraryManifest.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{manifest_path}: malformed manifest ({exc})")

    entries = []
    for item in manifest.entries:
        mode_path = os.path.join(path, item.file)
        if not os.path.isfile(mode_path):
            raise FormatError(f"{path}: manifest references missing mode file {item.file}")
        with open(mode_path, "rb") as handle:
            model = _decode_model(mode_path, handle.read(), item.warnings)
        if model.state_dim != manifest.state_dim or model.rank != item.rank:
            raise FormatError(
                f"{mode_path}: shape {model.state_dim}x{model.rank} disagrees with manifest "
                f"{manifest.state_dim}x{item.rank}"
            )
        entries.append(RegimeEntry(item.label, item.parameter, model))

    grid = None
    try:
        if manifest.grid is not None:
            grid = FieldGrid(manifest.grid.nx, manifest.grid.ny,
                             tuple(manifest.grid.fields), tuple(manifest.grid.field_scales))
        lib = RegimeLibrary(tuple(entries), manifest.state_dim, manifest.dt, grid)
    except (ArgumentError, DimensionError) as exc:
        raise FormatError(f"{path}: inconsistent library ({exc})")

    logger.info(f"Loaded library of {len(lib)} regimes from {path}")
    return lib


def library_io(path: str, mode: str, lib: Optional[RegimeLibrary] = None) -> Optional[RegimeLibrary]:
    """Read (``mode='read'``) or write (``mode='write'``) a persisted library."""
    if mode == "write":
        if lib is None:
            raise ArgumentError("write mode needs a library")
        write_library(path, lib)
        return None
    if mode == "read":
        return read_library(path)
    raise ArgumentError(f"mode must be 'read' or 'write', got '{mode}'")
