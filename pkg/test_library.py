#!/usr/bin/env python3
"""
Tests for library construction, time augmentation, observation and persistence.
"""
import json
import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rscope.dmd import dmd_decompose
from rscope.exceptions import ArgumentError, DimensionError, FormatError, LibraryVersionError
from rscope.library import (
    MANIFEST_NAME, augment_basis, build_library, library_io, observe_library, read_library,
    write_library,
)
from rscope.models import DmdModel, FieldGrid, RankPolicy, SnapshotMatrix
from rscope.sensing import SensingConfig, make_sensing
from rscope.synthgen import LinearRegimeSpec, gen_linear_regime


def _regime(seed, n=30, s=40, angles=(0.3, 1.2, 2.1), radii=(1.0, 0.99, 0.98), label=""):
    eigenvalues = []
    for radius, angle in zip(radii, angles):
        value = radius * np.exp(1j * angle)
        eigenvalues += [value, np.conj(value)]
    spec = LinearRegimeSpec(n=n, r=len(eigenvalues), eigenvalues=eigenvalues, mode_seed=seed, s=s,
                            label=label)
    return gen_linear_regime(spec)


def _datasets(count=3):
    return [(f"R{i + 1}", float(i), _regime(10 + i, angles=(0.3 + 0.2 * i, 1.2, 2.1 - 0.1 * i),
                                             label=f"R{i + 1}"))
            for i in range(count)]


def test_build_library_keeps_order():
    lib = build_library(_datasets(), RankPolicy.fixed(6))
    assert lib.labels == ["R1", "R2", "R3"]
    assert lib.ranks == [6, 6, 6]
    assert lib.state_dim == 30 and lib.dt == 1.0

    single = build_library(_datasets(1), RankPolicy.fixed(6))
    assert len(single) == 1


def test_build_library_threads_match_serial():
    serial = build_library(_datasets(), RankPolicy.fixed(6), threads=1)
    threaded = build_library(_datasets(), RankPolicy.fixed(6), threads=3)
    for a, b in zip(serial, threaded):
        np.testing.assert_allclose(a.model.modes, b.model.modes, atol=1e-12)
        np.testing.assert_allclose(a.model.eigenvalues, b.model.eigenvalues, atol=1e-12)


def test_build_library_rejects_bad_inputs():
    datasets = _datasets(2)
    try:
        build_library([datasets[0], datasets[0]], RankPolicy.fixed(6))
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass
    other = ("X", 0.0, _regime(3, n=25))
    try:
        build_library([datasets[0], other], RankPolicy.fixed(6))
        assert False, "expected DimensionError"
    except DimensionError:
        pass


def test_augment_basis_small_example():
    model = DmdModel(np.array([[1.0], [0.0]]), np.array([0.5]), np.array([1.0]), 1.0, 1.0)
    augmented = augment_basis(model, 2)
    np.testing.assert_allclose(augmented.matrix.ravel(), [1.0, 0.0, 0.5, 0.0, 0.25, 0.0])
    assert augmented.depth == 2
    np.testing.assert_allclose(augmented.block(1).ravel(), [0.5, 0.0])

    same = augment_basis(model, 0)
    assert np.array_equal(same.matrix, model.modes)
    try:
        augment_basis(model, -1)
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass


def test_augmented_basis_spans_consecutive_windows():
    snap = _regime(21, n=30, s=40)
    model = dmd_decompose(snap, RankPolicy.fixed(6))
    t = 5
    for j in range(0, 11):
        window = snap.window(t, j + 1).ravel(order="F")
        basis = augment_basis(model, j).matrix
        coefficients, _, _, _ = np.linalg.lstsq(basis, window.astype(np.complex128), rcond=None)
        residual = np.linalg.norm(window - basis @ coefficients)
        assert residual < 1e-8 * np.linalg.norm(window), f"j={j}: residual {residual:.3e}"


def test_observe_identity_reproduces_modes():
    lib = build_library(_datasets(), RankPolicy.fixed(6))
    obs = observe_library(lib, make_sensing("identity", SensingConfig(n=30)), 0)
    for theta, entry in zip(obs.thetas, lib):
        np.testing.assert_allclose(theta, entry.model.modes, rtol=0, atol=1e-15)
    assert obs.measurement_dim == 30
    assert not obs.flagged


def test_observe_flags_rank_deficiency():
    lib = build_library(_datasets(), RankPolicy.fixed(6))
    C = make_sensing("point", SensingConfig(p=3, n=30, seed=1))
    obs = observe_library(lib, C, 0)
    assert set(obs.flagged) == {"R1", "R2", "R3"}
    assert all(rank <= 3 for rank in obs.numerical_ranks)
    assert "rank 3 < 6" in obs.flagged["R1"]

    gaussian = make_sensing("gaussian", SensingConfig(p=12, n=30, seed=1))
    full = observe_library(lib, gaussian, 2)
    assert not full.flagged
    assert full.measurement_dim == 36


def test_observe_rejects_dimension_mismatch():
    lib = build_library(_datasets(), RankPolicy.fixed(6))
    try:
        observe_library(lib, make_sensing("identity", SensingConfig(n=20)), 0)
        assert False, "expected DimensionError"
    except DimensionError:
        pass


def test_library_roundtrip():
    grid = FieldGrid(5, 6)
    datasets = [(label, parameter, SnapshotMatrix(snap.data, snap.dt, grid, label))
                for label, parameter, snap in _datasets()]
    lib = build_library(datasets, RankPolicy.fixed(6))
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "library")
        write_library(path, lib)
        loaded = read_library(path)

        assert loaded.labels == lib.labels
        assert loaded.grid == grid
        assert loaded.state_dim == lib.state_dim and loaded.dt == lib.dt
        for a, b in zip(lib, loaded):
            assert a.parameter == b.parameter
            assert np.array_equal(a.model.modes, b.model.modes)
            assert np.array_equal(a.model.eigenvalues, b.model.eigenvalues)
            assert np.array_equal(a.model.singular_values, b.model.singular_values)
            assert a.model.energy_captured == b.model.energy_captured
            assert a.model.subspace_gap == b.model.subspace_gap

        again = library_io(path, "read")
        assert again.labels == lib.labels


def test_library_format_errors():
    lib = build_library(_datasets(2), RankPolicy.fixed(6))
    with tempfile.TemporaryDirectory() as tmp:
        try:
            read_library(os.path.join(tmp, "nothing"))
            assert False, "expected FormatError for a missing manifest"
        except FormatError:
            pass

        path = os.path.join(tmp, "library")
        write_library(path, lib)
        manifest_path = os.path.join(path, MANIFEST_NAME)
        with open(manifest_path, "r", encoding="utf-8") as handle:
            manifest = json.load(handle)

        manifest["format_version"] = "2.0"
        with open(manifest_path, "w", encoding="utf-8") as handle:
            json.dump(manifest, handle)
        try:
            read_library(path)
            assert False, "expected LibraryVersionError"
        except LibraryVersionError:
            pass

        manifest["format_version"] = "1.3"
        with open(manifest_path, "w", encoding="utf-8") as handle:
            json.dump(manifest, handle)
        assert read_library(path).labels == ["R1", "R2"]

        os.remove(os.path.join(path, manifest["entries"][1]["file"]))
        try:
            read_library(path)
            assert False, "expected FormatError for a missing mode file"
        except FormatError:
            pass


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
