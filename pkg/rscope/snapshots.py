"""
Snapshot stacking, grid resampling and snapshot file I/O.

Binary layout (little-endian)::

    "RSNP" | u32 version=1 | u64 n | u64 s | f64 dt | u8 grid flag
    [u32 nx | u32 ny | u32 field count | per field: u16 len, UTF-8 name, f64 scale]
    n*s f64 values, column-major (column t is the state at step t)
"""
import os
import struct
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from rscope.exceptions import ArgumentError, DimensionError, FormatError
from rscope.models import FieldGrid, SnapshotMatrix
from utils.logger import logger

SNAPSHOT_MAGIC = b"RSNP"
SNAPSHOT_VERSION = 1

_HEADER = struct.Struct("<4sIQQdB")
_GRID = struct.Struct("<III")
_NAME_LEN = struct.Struct("<H")
_SCALE = struct.Struct("<d")


def stack_fields(fields: Sequence[Tuple[str, np.ndarray]], scales: Sequence[float], dt: float,
                 nx: Optional[int] = None, ny: Optional[int] = None,
                 label: str = "") -> SnapshotMatrix:
    """Stack per-field snapshot blocks vertically, each multiplied by its scale.

    Args:
        fields: ordered ``(name, n_f x s)`` blocks sharing ``s`` and ``n_f``.
        scales: positive factor per field (e.g. 5000 for velocities).
        dt: sampling interval.
        nx, ny: grid shape; defaults to ``n_f x 1`` when omitted.
    """
    if not fields:
        raise ArgumentError("stack_fields needs at least one field")
    if len(scales) != len(fields):
        raise ArgumentError(f"Expected {len(fields)} scales, got {len(scales)}")
    if any(not np.isfinite(scale) or scale <= 0.0 for scale in scales):
        raise ArgumentError(f"Field scales must be strictly positive, got {list(scales)}")

    blocks = [np.asarray(block, dtype=np.float64) for _, block in fields]
    if any(block.ndim != 2 for block in blocks):
        raise DimensionError("Every field block must be a 2-D matrix")
    columns = {block.shape[1] for block in blocks}
    if len(columns) != 1:
        raise DimensionError(f"Field blocks disagree on snapshot count: {sorted(columns)}")
    rows = {block.shape[0] for block in blocks}
    if len(rows) != 1:
        raise DimensionError(f"Field blocks disagree on node count: {sorted(rows)}")

    nodes = rows.pop()
    if nx is None and ny is None:
        nx, ny = nodes, 1
    elif nx is None or ny is None or nx * ny != nodes:
        raise DimensionError(f"Grid {nx}x{ny} does not match {nodes} nodes per field")

    grid = FieldGrid(nx, ny, tuple(name for name, _ in fields), tuple(float(s) for s in scales))
    data = np.vstack([block * scale for block, scale in zip(blocks, grid.field_scales)])
    return SnapshotMatrix(data, dt, grid, label)


def unstack_fields(snap: SnapshotMatrix) -> List[Tuple[str, np.ndarray]]:
    """Split a stacked snapshot matrix back into unscaled field blocks."""
    if snap.grid is None:
        raise ArgumentError("unstack_fields needs grid metadata")
    return [
        (name, snap.data[snap.grid.field_slice(name)] / scale)
        for name, scale in zip(snap.grid.fields, snap.grid.field_scales)
    ]


def regrid_bilinear(snap: SnapshotMatrix, dst: FieldGrid) -> SnapshotMatrix:
    """Bilinearly interpolate every field of every snapshot onto ``dst``.

    Destination nodes outside the source hull take the nearest edge value.
    """
    src = snap.grid
    if src is None:
        raise ArgumentError("regrid_bilinear needs a snapshot matrix with grid metadata")
    if tuple(src.fields) != tuple(dst.fields):
        raise ArgumentError(f"Field lists differ: {list(src.fields)} vs {list(dst.fields)}")
    if min(src.nx, src.ny) < 2:
        raise ArgumentError("Source grid needs at least two nodes per direction")

    src_x, src_y = src.coordinates()
    dst_x, dst_y = dst.coordinates()
    dst_x = np.clip(dst_x, src_x[0], src_x[-1])
    dst_y = np.clip(dst_y, src_y[0], src_y[-1])
    yy, xx = np.meshgrid(dst_y, dst_x, indexing="ij")
    points = np.column_stack([yy.ravel(), xx.ravel()])

    blocks = []
    for name in src.fields:
        # (ny, nx, s) so that row-major flattening reproduces iy*nx + ix
        values = snap.data[src.field_slice(name)].reshape(src.ny, src.nx, snap.s)
        interpolator = RegularGridInterpolator((src_y, src_x), values, method="linear")
        blocks.append(interpolator(points))

    grid = FieldGrid(dst.nx, dst.ny, src.fields, src.field_scales)
    logger.debug(f"Regridded {snap.label or 'snapshots'} from {src.nx}x{src.ny} to {dst.nx}x{dst.ny}")
    return SnapshotMatrix(np.vstack(blocks), snap.dt, grid, snap.label)


def write_snapshots(path: str, snap: SnapshotMatrix) -> str:
    """Write a snapshot matrix in the binary snapshot format."""
    if not isinstance(snap, SnapshotMatrix):
        raise ArgumentError("write_snapshots expects a SnapshotMatrix")

    parts = [_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, snap.n, snap.s, snap.dt,
                          1 if snap.grid is not None else 0)]
    if snap.grid is not None:
        grid = snap.grid
        parts.append(_GRID.pack(grid.nx, grid.ny, len(grid.fields)))
        for name, scale in zip(grid.fields, grid.field_scales):
            encoded = name.encode("utf-8")
            parts.append(_NAME_LEN.pack(len(encoded)))
            parts.append(encoded)
            parts.append(_SCALE.pack(scale))
    parts.append(np.asarray(snap.data, dtype="<f8").tobytes(order="F"))

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(b"".join(parts))
    logger.debug(f"Wrote {snap.n}x{snap.s} snapshots to {path}")
    return path


def read_snapshots(path: str, label: Optional[str] = None) -> SnapshotMatrix:
    """Read a snapshot matrix written by :func:`write_snapshots`."""
    with open(path, "rb") as handle:
        payload = handle.read()

    if len(payload) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, s, dt, grid_flag = _HEADER.unpack_from(payload, 0)
    if magic != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise FormatError(f"{path}: unsupported snapshot format version {version}")
    offset = _HEADER.size

    grid = None
    try:
        if grid_flag == 1:
            nx, ny, count = _GRID.unpack_from(payload, offset)
            offset += _GRID.size
            names, scales = [], []
            for _ in range(count):
                (length,) = _NAME_LEN.unpack_from(payload, offset)
                offset += _NAME_LEN.size
                raw = payload[offset:offset + length]
                if len(raw) != length:
                    raise FormatError(f"{path}: truncated field name")
                names.append(raw.decode("utf-8"))
                offset += length
                (scale,) = _SCALE.unpack_from(payload, offset)
                offset += _SCALE.size
                scales.append(scale)
            grid = FieldGrid(nx, ny, tuple(names), tuple(scales))
        elif grid_flag != 0:
            raise FormatError(f"{path}: invalid grid flag {grid_flag}")
    except struct.error as exc:
        raise FormatError(f"{path}: truncated grid block ({exc})")
    except (UnicodeDecodeError, ArgumentError) as exc:
        raise FormatError(f"{path}: invalid grid block ({exc})")

    expected = n * s * 8
    body = payload[offset:]
    if len(body) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, found {len(body)}")

    data = np.frombuffer(body, dtype="<f8").reshape((n, s), order="F")
    try:
        return SnapshotMatrix(data, dt, grid, label if label is not None else os.path.splitext(os.path.basename(path))[0])
    except (ArgumentError, DimensionError) as exc:
        raise FormatError(f"{path}: {exc}")


def snapshot_io(path: str, mode: str, snap: Optional[SnapshotMatrix] = None):
    """Read (``mode='read'``) or write (``mode='write'``) a snapshot file."""
    if mode == "write":
        if snap is None:
            raise ArgumentError("write mode needs a snapshot matrix")
        write_snapshots(path, snap)
        return None
    if mode == "read":
        return read_snapshots(path)
    raise ArgumentError(f"mode must be 'read' or 'write', got '{mode}'")


def read_snapshot_csv(path: str, dt: float = 1.0, label: Optional[str] = None,
                      grid: Optional[FieldGrid] = None) -> SnapshotMatrix:
    """Import a headerless CSV (rows = state components, columns = time)."""
    frame = pd.read_csv(path, header=None, dtype=np.float64)
    name = label if label is not None else os.path.splitext(os.path.basename(path))[0]
    return SnapshotMatrix(frame.to_numpy(), dt, grid, name)


def write_snapshot_csv(path: str, snap: SnapshotMatrix) -> str:
    """Export snapshots as a headerless CSV with round-trip float text."""
    frame = pd.DataFrame(snap.data)
    frame.to_csv(path, header=False, index=False, float_format="%.17g")
    return path
