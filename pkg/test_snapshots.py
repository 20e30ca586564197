#!/usr/bin/env python3
"""
Tests for snapshot stacking, regridding and snapshot file I/O.
"""
import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rscope.exceptions import ArgumentError, DimensionError, FormatError
from rscope.models import FieldGrid, SnapshotMatrix
from rscope.snapshots import (
    read_snapshot_csv, read_snapshots, regrid_bilinear, snapshot_io, stack_fields,
    unstack_fields, write_snapshot_csv, write_snapshots,
)


def _two_field_snapshots():
    rng = np.random.default_rng(3)
    temperature = rng.standard_normal((20, 6))
    velocity = rng.standard_normal((20, 6)) * 1e-3
    return temperature, velocity


def test_stack_and_unstack_fields():
    temperature, velocity = _two_field_snapshots()
    snap = stack_fields([("T", temperature), ("ux", velocity)], [1.0, 5000.0], dt=0.5, nx=5, ny=4)
    assert snap.n == 40 and snap.s == 6
    assert snap.grid.fields == ("T", "ux")
    np.testing.assert_allclose(snap.data[20:], velocity * 5000.0, rtol=0, atol=0)

    blocks = dict(unstack_fields(snap))
    np.testing.assert_allclose(blocks["T"], temperature, rtol=1e-15)
    np.testing.assert_allclose(blocks["ux"], velocity, rtol=1e-14)


def test_stack_fields_rejects_mismatched_blocks():
    temperature, velocity = _two_field_snapshots()
    try:
        stack_fields([("T", temperature), ("ux", velocity[:, :5])], [1.0, 1.0], dt=1.0)
        assert False, "expected DimensionError"
    except DimensionError:
        pass
    try:
        stack_fields([("T", temperature)], [0.0], dt=1.0)
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass


def test_snapshot_matrix_validation():
    try:
        SnapshotMatrix(np.ones((4, 1)))
        assert False, "expected DimensionError"
    except DimensionError:
        pass
    data = np.ones((4, 3))
    data[1, 1] = np.nan
    try:
        SnapshotMatrix(data)
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass


def test_binary_roundtrip_is_bit_exact():
    temperature, velocity = _two_field_snapshots()
    snap = stack_fields([("T", temperature), ("uy", velocity)], [1.0, 5000.0], dt=0.25, nx=5, ny=4,
                        label="case")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "nested", "case.rsnp")
        write_snapshots(path, snap)
        loaded = read_snapshots(path)
        assert np.array_equal(loaded.data, snap.data)
        assert loaded.dt == snap.dt
        assert loaded.grid == snap.grid
        assert loaded.label == "case"

        snapshot_io(path, "write", SnapshotMatrix(np.arange(6.0).reshape(2, 3)))
        plain = snapshot_io(path, "read")
        assert plain.grid is None
        assert np.array_equal(plain.data, np.arange(6.0).reshape(2, 3))


def test_corrupt_files_raise_format_error():
    snap = SnapshotMatrix(np.arange(12.0).reshape(3, 4))
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "x.rsnp")
        write_snapshots(path, snap)
        with open(path, "rb") as handle:
            payload = handle.read()

        with open(path, "wb") as handle:
            handle.write(b"XXXX" + payload[4:])
        try:
            read_snapshots(path)
            assert False, "expected FormatError for bad magic"
        except FormatError:
            pass

        with open(path, "wb") as handle:
            handle.write(payload[:-8])
        try:
            read_snapshots(path)
            assert False, "expected FormatError for truncation"
        except FormatError:
            pass


def test_regrid_reproduces_linear_fields():
    src = FieldGrid(5, 4)
    x, y = src.coordinates()
    yy, xx = np.meshgrid(y, x, indexing="ij")
    first = (2.0 * xx + 3.0 * yy).ravel()
    second = (1.0 - xx + 0.5 * yy).ravel()
    snap = SnapshotMatrix(np.column_stack([first, second]), grid=src)

    dst = FieldGrid(9, 7)
    result = regrid_bilinear(snap, dst)
    dx, dy = dst.coordinates()
    dyy, dxx = np.meshgrid(dy, dx, indexing="ij")
    np.testing.assert_allclose(result.data[:, 0], (2.0 * dxx + 3.0 * dyy).ravel(), atol=1e-12)
    np.testing.assert_allclose(result.data[:, 1], (1.0 - dxx + 0.5 * dyy).ravel(), atol=1e-12)
    assert result.grid.nx == 9 and result.grid.ny == 7


def test_regrid_is_linear():
    rng = np.random.default_rng(23)
    src, dst = FieldGrid(7, 6, ("T", "u"), (1.0, 2.0)), FieldGrid(13, 4, ("T", "u"), (1.0, 2.0))
    X = rng.standard_normal((src.state_dim, 3))
    Y = rng.standard_normal((src.state_dim, 3))
    a, b = 2.5, -1.3
    combined = regrid_bilinear(SnapshotMatrix(a * X + b * Y, grid=src), dst).data
    separate = (a * regrid_bilinear(SnapshotMatrix(X, grid=src), dst).data
                + b * regrid_bilinear(SnapshotMatrix(Y, grid=src), dst).data)
    np.testing.assert_allclose(combined, separate, atol=1e-12)


def test_regrid_smooth_field_accuracy():
    def field(grid):
        x, y = grid.coordinates()
        yy, xx = np.meshgrid(y, x, indexing="ij")
        return (np.sin(2 * np.pi * xx) * np.sin(2 * np.pi * yy)).ravel()

    src, dst = FieldGrid(100, 100), FieldGrid(50, 50)
    values = field(src)
    result = regrid_bilinear(SnapshotMatrix(np.column_stack([values, -values]), grid=src), dst)
    expected = field(dst)
    assert np.max(np.abs(result.data[:, 0] - expected)) < 5e-3
    assert np.max(np.abs(result.data[:, 1] + expected)) < 5e-3


def test_regrid_edges_take_source_edge_values():
    rng = np.random.default_rng(9)
    src = FieldGrid(6, 5)
    data = rng.standard_normal((src.state_dim, 2))
    values = data.reshape(src.ny, src.nx, 2)
    _, src_y = src.coordinates()

    # a single destination column sits on the x = 0 edge of the source hull
    edge = regrid_bilinear(SnapshotMatrix(data, grid=src), FieldGrid(1, 9)).data
    _, dst_y = FieldGrid(1, 9).coordinates()
    for column in range(2):
        np.testing.assert_allclose(edge[:, column], np.interp(dst_y, src_y, values[:, 0, column]), atol=1e-12)

    result = regrid_bilinear(SnapshotMatrix(data, grid=src), FieldGrid(11, 3)).data.reshape(3, 11, 2)
    for iy, ix, sy, sx in ((0, 0, 0, 0), (0, 10, 0, 5), (2, 0, 4, 0), (2, 10, 4, 5)):
        np.testing.assert_allclose(result[iy, ix], values[sy, sx], atol=1e-14)



def test_csv_roundtrip():
    rng = np.random.default_rng(11)
    snap = SnapshotMatrix(rng.standard_normal((7, 5)), dt=0.1)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "snap.csv")
        write_snapshot_csv(path, snap)
        loaded = read_snapshot_csv(path, dt=0.1)
        assert np.array_equal(loaded.data, snap.data)
        assert loaded.label == "snap"


if __name__ == "__main__":
    tests = [value for name, value in sorted(globals().items()) if name.startswith("test_") and callable(value)]
    failures = 0
    for test in tests:
        try:
            test()
            print(f"✓ {test.__name__}")
        except Exception as e:
            failures += 1
            print(f"❌ {test.__name__}: {e}")
    sys.exit(1 if failures else 0)
