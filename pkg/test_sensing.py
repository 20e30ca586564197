#!/usr/bin/env python3
"""
Tests for sensing operators, the time lift and noisy measurements.
"""
import os
import sys
import tempfile

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rscope.exceptions import ArgumentError, DegenerateSignalError, DimensionError
from rscope.models import FieldGrid, SensingOperator
from rscope.sensing import (
    SensingConfig, block_diag_lift, derive_trial_seed, export_sensing_csv, make_sensing, measure,
    ring_nodes, sensed_windows,
)


def test_identity_and_point_operators():
    identity = make_sensing("identity", SensingConfig(n=7))
    assert np.array_equal(identity.matrix, np.eye(7))

    point = make_sensing("point", SensingConfig(p=7, n=7, seed=3))
    assert np.array_equal(np.sort(np.argmax(point.matrix, axis=1)), np.arange(7))
    assert sorted(point.sensor_indices) == list(range(7))

    fixed = make_sensing("point", SensingConfig(n=10, indices=[4, 1, 8]))
    assert fixed.sensor_indices == (4, 1, 8)
    assert np.array_equal(np.argmax(fixed.matrix, axis=1), [4, 1, 8])

    try:
        make_sensing("point", SensingConfig(n=10, indices=[1, 1]))
        assert False, "expected ArgumentError for repeated indices"
    except ArgumentError:
        pass
    try:
        make_sensing("point", SensingConfig(p=11, n=10))
        assert False, "expected ArgumentError for p > n"
    except ArgumentError:
        pass


def test_same_seed_same_operator():
    a = make_sensing("gaussian", SensingConfig(p=5, n=40, seed=9))
    b = make_sensing("gaussian", SensingConfig(p=5, n=40, seed=9))
    c = make_sensing("gaussian", SensingConfig(p=5, n=40, seed=10))
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)


def test_bernoulli_entries():
    op = make_sensing("bernoulli", SensingConfig(p=16, n=30, seed=2))
    assert set(np.unique(op.matrix).tolist()) == {-0.25, 0.25}


def test_ring_nodes_counts():
    grid = FieldGrid(50, 50)
    assert ring_nodes(grid, 0).shape[0] == 196
    assert ring_nodes(grid, 1).shape[0] == 188
    assert 0 in ring_nodes(grid, 0)
    assert grid.node_index(1, 1) in ring_nodes(grid, 1)


def test_boundary_sensors_per_field():
    grid = FieldGrid(50, 50, ("T", "ux", "uy"), (1.0, 5000.0, 5000.0))
    config = SensingConfig(grid=grid, seed=4, per_field_counts={"T": 50, "velocity": 10})
    op = make_sensing("boundary", config)
    assert op.p == 60 and op.n == 7500

    columns = np.argmax(op.matrix, axis=1)
    temperature, velocity = columns[:50], columns[50:]
    assert set(temperature.tolist()) <= set(ring_nodes(grid, 0).tolist())
    inner = set(ring_nodes(grid, 1).tolist())
    for column in velocity:
        assert column >= grid.nodes
        assert column % grid.nodes in inner

    try:
        make_sensing("boundary", SensingConfig(grid=grid, per_field_counts={"T": 197}))
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass
    try:
        make_sensing("boundary", SensingConfig(p=5, grid=grid, per_field_counts={"T": 3}))
        assert False, "expected ArgumentError for mismatched totals"
    except ArgumentError:
        pass


def test_tomographic_lines():
    grid = FieldGrid(3, 2)
    op = make_sensing("tomographic", SensingConfig(grid=grid))
    assert op.p == 5
    np.testing.assert_array_equal(op.matrix.sum(axis=1), [3, 3, 2, 2, 2])
    subset = make_sensing("tomographic", SensingConfig(p=2, grid=grid, seed=1))
    assert subset.p == 2


def test_block_diag_lift():
    C = SensingOperator(np.array([[1.0, 0.0]]), "point", sensor_indices=(0,))
    lifted = block_diag_lift(C, 2).toarray()
    expected = np.zeros((3, 6))
    expected[0, 0] = expected[1, 2] = expected[2, 4] = 1.0
    assert np.array_equal(lifted, expected)

    op = make_sensing("gaussian", SensingConfig(p=3, n=8, seed=1))
    states = np.random.default_rng(0).standard_normal((8, 4))
    stacked = block_diag_lift(op, 3) @ states.ravel(order="F")
    np.testing.assert_allclose(stacked, measure(op, states).values, atol=1e-12)


def test_sensed_windows_match_clean_measurements():
    rng = np.random.default_rng(21)
    C = make_sensing("gaussian", SensingConfig(p=3, n=6, seed=4))
    states = rng.standard_normal((6, 7))
    windows = sensed_windows(C, states, 2)
    assert windows.shape == (9, 5)
    for t in range(5):
        np.testing.assert_allclose(windows[:, t], measure(C, states[:, t:t + 3]).values, atol=1e-12)
    np.testing.assert_allclose(sensed_windows(C, states, 0), C.matrix @ states, atol=1e-12)
    try:
        sensed_windows(C, states, 7)
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass



def test_noise_is_calibrated():
    op = make_sensing("gaussian", SensingConfig(p=10, n=25, seed=6))
    states = np.random.default_rng(1).standard_normal((25, 4))
    clean = measure(op, states)
    assert clean.depth == 3 and clean.noise_fraction == 0.0

    for snr_db, expected in ((20.0, 0.1), (10.0, 10 ** -0.5)):
        noisy = measure(op, states, snr_db, seed=12)
        ratio = np.linalg.norm(noisy.values - clean.values) / np.linalg.norm(clean.values)
        assert abs(ratio - expected) < 1e-12, f"{snr_db} dB: {ratio}"

    again = measure(op, states, 20.0, seed=12)
    assert np.array_equal(again.values, measure(op, states, 20.0, seed=12).values)


def test_measure_errors():
    op = make_sensing("identity", SensingConfig(n=4))
    try:
        measure(op, np.zeros((4, 2)), 20.0, seed=1)
        assert False, "expected DegenerateSignalError"
    except DegenerateSignalError:
        pass
    try:
        measure(op, np.ones((5, 2)))
        assert False, "expected DimensionError"
    except DimensionError:
        pass


def test_trial_seed_derivation():
    assert derive_trial_seed(42, 0, 0) == 42
    assert derive_trial_seed(42, 2, 7) == 42 ^ 2_000_007


def test_export_sensing_csv():
    op = make_sensing("point", SensingConfig(n=6, indices=[2, 5]))
    with tempfile.TemporaryDirectory() as tmp:
        path = export_sensing_csv(op, os.path.join(tmp, "sensing.csv"))
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["sensor"] + [f"x{i}" for i in range(6)]
        assert np.array_equal(frame.iloc[:, 1:].to_numpy(), op.matrix)


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
