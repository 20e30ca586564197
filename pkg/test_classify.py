#!/usr/bin/env python3
"""
Tests for least-squares classification and full-state reconstruction.
"""
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rscope.classify import classify, lsq_fit, reconstruct, relative_error
from rscope.exceptions import ArgumentError, DimensionError
from rscope.library import build_library, observe_library
from rscope.metrics import draw_trial
from rscope.models import ObservedLibrary, RankPolicy
from rscope.sensing import SensingConfig, make_sensing, measure
from rscope.synthgen import LinearRegimeSpec, gen_linear_regime


def _suite(count=3, n=100, s=60):
    """``count`` r=4 regimes with distinct spectra."""
    datasets = []
    for i in range(count):
        eigenvalues = []
        for radius, angle in ((1.0, 0.3 + 0.4 * i), (0.98, 1.2 + 0.4 * i)):
            value = radius * np.exp(1j * angle)
            eigenvalues += [value, np.conj(value)]
        spec = LinearRegimeSpec(n=n, r=4, eigenvalues=eigenvalues, mode_seed=10 + i, s=s, label=f"R{i + 1}")
        datasets.append((f"R{i + 1}", float(i), gen_linear_regime(spec)))
    return datasets


def test_lsq_fit_consistent_system():
    rng = np.random.default_rng(0)
    theta = rng.standard_normal((40, 8))
    beta_true = rng.standard_normal(8)
    beta, residual = lsq_fit(theta, theta @ beta_true)
    np.testing.assert_allclose(beta, beta_true, atol=1e-10)
    assert residual < 1e-10


def test_lsq_fit_normal_equations():
    rng = np.random.default_rng(1)
    theta = rng.standard_normal((40, 8))
    y = rng.standard_normal(40)
    beta, residual = lsq_fit(theta, y)
    np.testing.assert_allclose(theta.T @ (y - theta @ beta), 0.0, atol=1e-10)
    assert abs(residual - np.linalg.norm(y - theta @ beta)) < 1e-12

    orthogonal = np.zeros(40)
    q, _ = np.linalg.qr(theta, mode="complete")
    orthogonal[:] = q[:, -1]
    beta, residual = lsq_fit(theta, orthogonal)
    np.testing.assert_allclose(beta, 0.0, atol=1e-12)
    assert abs(residual - 1.0) < 1e-12

    try:
        lsq_fit(theta, np.ones(39))
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass


def test_single_regime_always_wins():
    obs = ObservedLibrary.from_blocks([np.random.default_rng(2).standard_normal((6, 2))])
    report = classify(obs, np.ones(6))
    assert report.winner == 0 and report.winner_label == "R1"


def test_orthogonal_regimes_are_separated():
    eye = np.eye(6)
    obs = ObservedLibrary.from_blocks([eye[:, :2], eye[:, 2:4], eye[:, 4:]])
    y = 2.0 * eye[:, 2] - eye[:, 3]
    report = classify(obs, y)
    assert report.winner == 1
    assert report.residuals[1] < 1e-14
    np.testing.assert_allclose(report.projection_norms, [0.0, np.sqrt(5.0), 0.0], atol=1e-14)


def test_projection_pythagoras_and_scale_invariance():
    rng = np.random.default_rng(3)
    obs = ObservedLibrary.from_blocks([rng.standard_normal((12, 3)) for _ in range(4)])
    y = rng.standard_normal(12)
    report = classify(obs, y)
    np.testing.assert_allclose(report.projection_norms ** 2 + report.residuals ** 2,
                               np.linalg.norm(y) ** 2, rtol=1e-12)
    for scale in (1e-3, 7.5, 1e4):
        assert classify(obs, scale * y).winner == report.winner

    record = report.to_record()
    assert record["winner"] == report.winner_label
    assert "projection_R4" in record and "residual_R1" in record


def test_measurement_length_must_match():
    obs = ObservedLibrary.from_blocks([np.eye(4)[:, :2]])
    try:
        classify(obs, np.ones(5))
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass


def test_classification_with_gaussian_sensors():
    datasets = _suite()
    lib = build_library(datasets, RankPolicy.fixed(4))
    C = make_sensing("gaussian", SensingConfig(p=20, n=100, seed=7))
    obs = observe_library(lib, C, 3)
    for row, (label, _, snap) in enumerate(datasets):
        for trial in range(50):
            _, y = draw_trial(C, snap, 3, 20.0, 7, row, trial)
            assert classify(obs, y).winner_label == label


def test_noiseless_reconstruction_is_exact():
    datasets = _suite()
    lib = build_library(datasets, RankPolicy.fixed(4))
    C = make_sensing("identity", SensingConfig(n=100))
    obs = observe_library(lib, C, 2)
    snap = datasets[1][2]
    truth = snap.window(10, 3)
    estimate = reconstruct(lib, obs, 1, measure(C, truth))
    assert estimate.states.shape == (100, 3)
    assert relative_error(truth, estimate.states) <= 1e-8
    assert estimate.imag_residual < 1e-8


def test_reconstruction_prefers_generating_regime():
    datasets = _suite()
    lib = build_library(datasets, RankPolicy.fixed(4))
    C = make_sensing("point", SensingConfig(p=20, n=100, seed=5))
    obs = observe_library(lib, C, 2)
    for k, (_, _, snap) in enumerate(datasets):
        truth = snap.window(7, 3)
        y = measure(C, truth)
        errors = [relative_error(truth, reconstruct(lib, obs, i, y).states) for i in range(len(lib))]
        assert int(np.argmin(errors)) == k
        assert errors[k] < 1e-8


def test_reconstruct_argument_checks():
    datasets = _suite(2)
    lib = build_library(datasets, RankPolicy.fixed(4))
    obs = observe_library(lib, make_sensing("identity", SensingConfig(n=100)), 0)
    y = np.ones(100)
    try:
        reconstruct(lib, obs, 2, y)
        assert False, "expected ArgumentError"
    except ArgumentError:
        pass
    try:
        relative_error(np.ones(3), np.ones(4))
        assert False, "expected DimensionError"
    except DimensionError:
        pass
    assert relative_error(np.array([3.0, 4.0]), np.zeros(2)) == 1.0


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
