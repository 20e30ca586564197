"""
Online-phase processors: classification and reconstruction trials.
"""
from typing import Any, Dict

from processors.base_processor import BaseProcessor, accuracy_percent
from rscope.classify import classify, reconstruct, relative_error
from rscope.metrics import draw_trial
from utils.progress_tracker import TrialProgressTracker


class ClassifyProcessor(BaseProcessor):
    """Classify ``trials`` random windows of every test set."""

    command = "classify"

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        obs = self.observe(lib)
        tests = self.test_sets(lib)
        j, trials = self.config.j, self.config.trials

        records = []
        hits = scored = 0
        with TrialProgressTracker("classify", trials * len(tests)) as tracker:
            for row, snap in enumerate(tests):
                for trial in range(trials):
                    start, y = draw_trial(obs.sensing, snap, j, self.config.snr_db, self.config.seed, row, trial)
                    report = classify(obs, y)
                    correct = report.winner_label == snap.label
                    if snap.label in obs.labels:
                        scored += 1
                        hits += int(correct)
                    record = {'truth': snap.label, 'trial': trial, 'start': start}
                    record.update(report.to_record())
                    record['correct'] = int(correct)
                    records.append(record)
                    tracker.update(1, failed=int(not correct))

        self.add_artifact(self.writer.write_records("classification", records))
        return {'trials': len(records), 'accuracy_percent': accuracy_percent(hits, scored)}


class ReconstructProcessor(BaseProcessor):
    """Reconstruct full states from every regime and compare with the truth."""

    command = "reconstruct"

    def execute(self) -> Dict[str, Any]:
        lib = self.load_library()
        obs = self.observe(lib)
        tests = self.test_sets(lib)
        j, trials = self.config.j, self.config.trials

        records = []
        best_hits = scored = 0
        with TrialProgressTracker("reconstruct", trials * len(tests)) as tracker:
            for row, snap in enumerate(tests):
                for trial in range(trials):
                    start, y = draw_trial(obs.sensing, snap, j, self.config.snr_db, self.config.seed, row, trial)
                    truth = snap.window(start, j + 1)
                    winner = classify(obs, y).winner

                    record = {'truth': snap.label, 'trial': trial, 'start': start,
                              'winner': obs.labels[winner]}
                    errors = []
                    for k, label in enumerate(lib.labels):
                        estimate = reconstruct(lib, obs, k, y)
                        error = relative_error(truth, estimate.states)
                        errors.append(error)
                        record[f'error_{label}'] = error
                        record[f'imag_residual_{label}'] = estimate.imag_residual
                    best = min(range(len(errors)), key=lambda k: (errors[k], k))
                    record['best'] = lib.labels[best]
                    if snap.label in lib.labels:
                        scored += 1
                        best_hits += int(lib.labels[best] == snap.label)
                    records.append(record)
                    tracker.update(1)

        self.add_artifact(self.writer.write_records("reconstruction", records))
        return {'trials': len(records), 'correct_regime_best_percent': accuracy_percent(best_hits, scored)}
