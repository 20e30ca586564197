#!/usr/bin/env python3
"""
Suite-level behaviour on the default six-regime suite: accuracy trends with
augmentation depth, block coherence decay, reconstruction discrimination
and out-of-sample classification.
"""
import os
import sys
from dataclasses import replace
from functools import lru_cache

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config.suites import suite_registry
from rscope.classify import classify, reconstruct, relative_error
from rscope.dmd import dmd_decompose
from rscope.library import build_library, observe_library
from rscope.metrics import confusion_matrix, draw_trial, mu_b_vs_augmentation, nearest_regimes
from rscope.models import RankPolicy
from rscope.sensing import SensingConfig, make_sensing
from rscope.synthgen import gen_suite


@lru_cache(maxsize=None)
def _default_suite():
    suite = suite_registry.get_suite("default")
    train, test = gen_suite(suite.entries(), suite.train_fraction, suite.j_max)
    return build_library(train, RankPolicy.fixed(10)), tuple(test)


def _point_sensors(p=20, seed=42):
    return make_sensing("point", SensingConfig(p=p, n=2500, seed=seed))


def test_accuracy_improves_with_depth():
    lib, test = _default_suite()
    C = _point_sensors()
    for snr_db, floor in ((20.0, 95.0), (10.0, 85.0)):
        shallow = confusion_matrix(lib, None, test, 100, snr_db, 1, 42, sensing=C).accuracy()
        deep = confusion_matrix(lib, None, test, 100, snr_db, 10, 42, sensing=C).accuracy()
        for label in lib.labels:
            assert deep[label] >= shallow[label], f"{snr_db} dB {label}: {deep[label]} < {shallow[label]}"
        assert np.mean(list(deep.values())) >= floor


def test_block_coherence_decays_with_depth():
    lib, _ = _default_suite()
    sweep = dict(mu_b_vs_augmentation(lib, _point_sensors(), [0, 10]))
    assert sweep[10] < sweep[0]


def test_reconstruction_identifies_generating_regime():
    lib, test = _default_suite()
    C = _point_sensors()
    j = 5
    obs = observe_library(lib, C, j)
    hits = 0
    for trial in range(100):
        row = trial % len(test)
        start, y = draw_trial(C, test[row], j, 10.0, 42, row, trial)
        truth = test[row].window(start, j + 1)
        errors = [relative_error(truth, reconstruct(lib, obs, k, y).states) for k in range(len(lib))]
        hits += int(lib.labels[int(np.argmin(errors))] == test[row].label)
    assert hits >= 90


def test_held_out_regime_goes_to_nearest_neighbour():
    lib, _ = _default_suite()
    suite = suite_registry.get_suite("default")
    base = suite.regimes[2]
    shifted = []
    for re_part, im_part in base.eigenvalues:
        value = complex(re_part, im_part)
        angle = np.angle(value) + (0.01 if value.imag > 0 else -0.01)
        shifted.append([abs(value) * np.cos(angle), abs(value) * np.sin(angle)])
    held = replace(base, label="H3", eigenvalues=shifted, mode_perturbation=0.1, perturbation_seed=77)
    train, test = gen_suite([held.to_entry()], suite.train_fraction, suite.j_max)

    held_model = dmd_decompose(train[0][2], RankPolicy.fixed(10))
    nearest = nearest_regimes([held_model.modes], lib)[0]
    assert lib.labels[nearest] == base.label

    C = _point_sensors()
    obs = observe_library(lib, C, 5)
    hits = 0
    for trial in range(100):
        _, y = draw_trial(C, test[0], 5, 20.0, 42, 0, trial)
        hits += int(classify(obs, y).winner == nearest)
    assert hits >= 80


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
