"""
Offline-phase processors: synthetic data, library construction and sensing.
"""
import os
from typing import Any, Dict

import numpy as np

from processors.base_processor import LIBRARY_DIR, SNAPSHOT_DIR, SUITE_INDEX, BaseProcessor
from rscope.sensing import export_sensing_csv
from rscope.library import write_library
from rscope.snapshots import write_snapshots
from utils.logger import logger


class SynthProcessor(BaseProcessor):
    """Generate the configured suite and write train/test snapshot files."""

    command = "synth"

    def execute(self) -> Dict[str, Any]:
        train, test = self._suite_split()
        snapshot_dir = self.output_path(SNAPSHOT_DIR)
        os.makedirs(snapshot_dir, exist_ok=True)

        records = []
        splits = [("train", label, parameter, snap) for label, parameter, snap in train]
        parameters = {label: parameter for label, parameter, _ in train}
        splits += [("test", snap.label, parameters[snap.label], snap) for snap in test]
        for split, label, parameter, snap in splits:
            name = f"{label}_{split}.rsnp"
            self.add_artifact(write_snapshots(os.path.join(snapshot_dir, name), snap))
            records.append({
                'label': label,
                'parameter': float(parameter),
                'split': split,
                'n': snap.n,
                's': snap.s,
                'dt': snap.dt,
                'file': f"{SNAPSHOT_DIR}/{name}",
            })

        self.add_artifact(self.writer.write_records(SUITE_INDEX, records))
        return {'suite': self.config.suite, 'regimes': len(train), 'test_sets': len(test)}


class BuildLibraryProcessor(BaseProcessor):
    """Decompose the training data and persist the regime library."""

    command = "build-lib"

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        self.add_artifact(write_library(self.output_path(LIBRARY_DIR), lib))

        train, _ = self.load_datasets()
        first_states = {label: snap.data[:, 0] for label, _, snap in train if snap.n == lib.state_dim}

        records = []
        for entry in lib:
            model = entry.model
            if entry.label in first_states:
                amplitudes = np.abs(model.amplitudes(first_states[entry.label]))
            else:
                amplitudes = np.full(model.rank, np.nan)
            for index, (value, frequency) in enumerate(zip(model.eigenvalues, model.frequencies)):
                records.append({
                    'regime': entry.label,
                    'index': index,
                    'real': float(value.real),
                    'imag': float(value.imag),
                    'modulus': float(abs(value)),
                    'frequency': float(frequency),
                    'amplitude': float(amplitudes[index]),
                })
            if model.warnings:
                logger.warning(f"{entry.label}: {'; '.join(model.warnings)}")
        self.add_artifact(self.writer.write_records("spectra", records))

        return {
            'regimes': len(lib),
            'ranks': ",".join(str(rank) for rank in lib.ranks),
            'min_energy': float(min(entry.model.energy_captured for entry in lib)),
            'max_subspace_gap': float(max(entry.model.subspace_gap for entry in lib)),
        }


class ObserveProcessor(BaseProcessor):
    """Build the sensing operator and report the observed library."""

    command = "observe"

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        C = self.make_operator(lib)
        obs = self.observe(lib, C=C)

        self.writer.ensure_output_directory()
        self.add_artifact(export_sensing_csv(C, self.output_path("sensing_operator.csv")))

        records = []
        for label, theta, rank, flag in zip(obs.labels, obs.thetas, obs.numerical_ranks, obs.flags):
            singular = np.linalg.svd(theta, compute_uv=False)
            records.append({
                'regime': label,
                'rows': theta.shape[0],
                'columns': theta.shape[1],
                'numerical_rank': rank,
                'condition': float(singular[0] / singular[-1]) if singular[-1] > 0 else float("inf"),
                'flag': flag or "",
            })
        self.add_artifact(self.writer.write_records("observed_library", records))

        return {
            'sensing': C.kind,
            'p': C.p,
            'j': obs.depth,
            'flagged': len(obs.flagged),
        }
