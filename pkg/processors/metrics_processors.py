"""
Diagnostic processors: library metrics, confusion matrices and sweeps.
"""
import itertools
from dataclasses import replace
from typing import Any, Dict, List, Optional

import numpy as np

from processors.base_processor import BaseProcessor
from rscope.metrics import (
    coherence_report, confusion_matrix, eta_alignment, gamma_matrix, kappa_matrix, library_epsilon,
    mu_b_vs_augmentation, prop1_certificate, write_metric_csv,
)
from rscope.models import MetricMatrix, RegimeLibrary, SnapshotMatrix
from rscope.sensing import sensed_windows
from utils.logger import logger


class MetricsProcessor(BaseProcessor):
    """Write eta, gamma, kappa, certificate and coherence diagnostics.

    Alignment metrics are written twice: for the full-state modes and for
    the sensed, time-augmented bases (``*_observed.csv``).
    """

    command = "metrics"

    def _write_metric(self, metric: MetricMatrix, name: str) -> str:
        return self.add_artifact(write_metric_csv(metric, self.output_path(name)))

    def _training_samples(self, lib: RegimeLibrary) -> Optional[List[SnapshotMatrix]]:
        train, _ = self.load_datasets()
        by_label = {label: snap for label, _, snap in train}
        if all(label in by_label and by_label[label].n == lib.state_dim for label in lib.labels):
            return [by_label[label] for label in lib.labels]
        logger.warning("Training data does not cover every library regime; kappa and certificate skipped")
        return None

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        obs = self.observe(lib)
        samples = self._training_samples(lib)

        summary: Dict[str, Any] = {'regimes': len(lib)}
        certificates = []
        for space, bases in (("full", lib), ("observed", obs)):
            suffix = "" if space == "full" else "_observed"
            eta_metric, eta = eta_alignment(bases)
            self._write_metric(eta_metric, f"eta{suffix}")
            self._write_metric(gamma_matrix(bases), f"gamma{suffix}")
            summary[f"eta{suffix}"] = eta
            if samples is None:
                continue

            if space == "full":
                data = [snap.data for snap in samples]
            else:
                data = [sensed_windows(obs.sensing, snap, obs.depth) for snap in samples]
            self._write_metric(kappa_matrix(bases, data), f"kappa{suffix}")
            epsilon = library_epsilon(bases, data)
            certified, _ = prop1_certificate(bases, samples=data)
            certificates.append({'space': space, 'j': obs.depth if space == "observed" else 0,
                                 'eta': eta, 'epsilon': epsilon, 'certified': int(certified)})
            logger.debug(f"{space} certificate: eta {eta:.6f}, epsilon {epsilon:.3e}, certified {certified}")
        if certificates:
            self.add_artifact(self.writer.write_records("certificate", certificates))

        if len(set(lib.ranks)) == 1:
            report = coherence_report(obs)
            self.add_artifact(self.writer.write_records("coherence", [{
                'j': self.config.j,
                'mu_b': report.mu_b,
                'nu': report.nu,
                'r_block': report.r_block,
                'd': report.d,
                'bound': report.bound,
                'bound_satisfied': int(report.bound_satisfied),
            }]))
            summary['mu_b'] = report.mu_b
        else:
            logger.warning(f"Unequal regime ranks {lib.ranks}; block coherence skipped")
        return summary


class ConfusionProcessor(BaseProcessor):
    """Monte-Carlo confusion matrix over the test sets."""

    command = "confusion"

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        obs = self.observe(lib)
        matrix = confusion_matrix(lib, obs, self.test_sets(lib), self.config.trials,
                                  self.config.snr_db, self.config.j, self.config.seed)
        self.add_artifact(self.writer.write_matrix("confusion", matrix.values,
                                                   matrix.row_labels, matrix.col_labels, corner="truth"))
        accuracy = matrix.accuracy()
        return {
            'trials': matrix.trials,
            'j': matrix.depth,
            'mean_accuracy_percent': float(np.mean(list(accuracy.values()))) if accuracy else float("nan"),
        }


class MuBSweepProcessor(BaseProcessor):
    """Block coherence as a function of augmentation depth."""

    command = "mu-b-sweep"

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        j_values = self.config.j_list or list(range(0, (self.config.j_max if self.config.j_max is not None else 10) + 1))
        sweep = mu_b_vs_augmentation(lib, self.make_operator(lib), j_values)
        records = [{'j': j, 'mu_b': mu_b} for j, mu_b in sweep]
        self.add_artifact(self.writer.write_records("mu_b_sweep", records))
        return {'points': len(records), 'mu_b_first': sweep[0][1], 'mu_b_last': sweep[-1][1]}


class SweepProcessor(BaseProcessor):
    """Accuracy over a grid of sensor counts, depths and noise levels."""

    command = "sweep"

    def _layouts(self) -> List[Dict[str, Optional[int]]]:
        sensing = self.config.sensing
        if sensing.kind == "boundary":
            pts = self.config.pt_list or [sensing.pt]
            pvs = self.config.pv_list or [sensing.pv]
            return [{'p': None, 'pt': pt, 'pv': pv} for pt, pv in itertools.product(pts, pvs)]
        ps = self.config.p_list or [sensing.p]
        return [{'p': p, 'pt': None, 'pv': None} for p in ps]

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        tests = self.test_sets(lib)
        j_values = self.config.j_list or [self.config.j]
        snr_values = self.config.snr_list or [self.config.snr_db]

        records = []
        for layout in self._layouts():
            C = self.make_operator(lib, replace(self.config.sensing, **layout))
            for j, snr_db in itertools.product(j_values, snr_values):
                matrix = confusion_matrix(lib, None, tests, self.config.trials, snr_db, j,
                                          self.config.seed, sensing=C)
                accuracy = matrix.accuracy()
                for label, value in accuracy.items():
                    records.append({'kind': C.kind, **layout, 'j': j, 'snr_db': snr_db,
                                    'regime': label, 'accuracy': value})
                overall = float(np.mean(list(accuracy.values()))) if accuracy else float("nan")
                records.append({'kind': C.kind, **layout, 'j': j, 'snr_db': snr_db,
                                'regime': "ALL", 'accuracy': overall})

        self.add_artifact(self.writer.write_records("sweep", records))
        return {'rows': len(records)}
