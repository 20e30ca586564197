"""
Example usage of the rscope library.

This file walks through the offline phase (synthetic suite, DMD library,
observed library) and the online phase (noisy sensor windows classified
and reconstructed), then prints the library diagnostics.
"""

import numpy as np

from config.suites import suite_registry
from rscope.classify import classify, reconstruct, relative_error
from rscope.exceptions import RscopeError
from rscope.library import build_library, observe_library
from rscope.metrics import (
    coherence_report, confusion_matrix, draw_trial, eta_alignment, gamma_matrix,
    mu_b_vs_augmentation,
)
from rscope.models import RankPolicy
from rscope.sensing import SensingConfig, make_sensing
from rscope.synthgen import gen_suite


def main():
    """Main example function demonstrating the offline and online phases."""

    suite = suite_registry.get_suite("small")
    j = 2

    try:
        # 1. Generate the suite and split each regime in time
        print("\n--- Generating Suite ---")
        train, test = gen_suite(suite.entries(), suite.train_fraction, suite.j_max)
        for label, parameter, snap in train:
            print(f"  - {label} (parameter {parameter}): n={snap.n}, s={snap.s}")

        # 2. Build the DMD library
        print("\n--- Building Library ---")
        lib = build_library(train, RankPolicy.fixed(4))
        for entry in lib.entries:
            radii = np.round(np.abs(entry.model.eigenvalues), 4)
            print(f"  - {entry.label}: rank {entry.model.rank}, |lambda| = {list(radii)}")

        # 3. Place sensors and observe the time-augmented library
        print("\n--- Observing Library ---")
        C = make_sensing("point", SensingConfig(p=20, n=lib.state_dim, seed=42))
        obs = observe_library(lib, C, j)
        print(f"{C.p} point sensors, depth j={j}, measurement dimension {obs.measurement_dim}")
        for label, flag in obs.flagged.items():
            print(f"  ! {label}: {flag}")

        # 4. Classify and reconstruct one noisy window per test set
        print("\n--- Online Classification ---")
        for row, snap in enumerate(test):
            start, y = draw_trial(C, snap, j, 20.0, 42, row, 0)
            report = classify(obs, y)
            estimate = reconstruct(lib, obs, report.winner, y)
            error = relative_error(snap.window(start, j + 1), estimate.states)
            print(f"  - {snap.label} at t={start}: classified as {report.winner_label}, "
                  f"reconstruction error {error:.2e}")

        # 5. Monte-Carlo confusion matrix
        print("\n--- Confusion Matrix (20 dB) ---")
        matrix = confusion_matrix(lib, obs, test, 50, 20.0, j, 42)
        for label, accuracy in matrix.accuracy().items():
            print(f"  - {label}: {accuracy:.1f}%")

        # 6. Diagnostics
        print("\n--- Diagnostics ---")
        bases = [entry.model.modes for entry in lib.entries]
        _, eta = eta_alignment(bases)
        print(f"eta = {eta:.4f}")
        print(f"gamma =\n{np.round(gamma_matrix(bases).values, 4)}")
        report = coherence_report(obs)
        print(f"mu_B = {report.mu_b:.4f}, nu = {report.nu:.4f}, bound = {report.bound:.4f}")
        for depth, mu_b in mu_b_vs_augmentation(lib, C, [0, 1, 2, 4]):
            print(f"  mu_B(j={depth}) = {mu_b:.4f}")

    except RscopeError as e:
        print(f"❌ {type(e).__name__}: {e}")
    except Exception as e:
        print(f"❌ Unexpected error: {e}")


if __name__ == "__main__":
    main()
