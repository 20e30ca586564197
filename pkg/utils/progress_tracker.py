"""
Progress tracking utilities for Monte-Carlo trials and parameter sweeps.
"""
import threading
from typing import Optional

from tqdm import tqdm

from config.settings import settings
from utils.logger import logger

BAR_FORMAT = '{l_bar}{bar}| {n_fmt}/{total_fmt} [{elapsed}<{remaining}, {rate_fmt}]'


class TrialProgressTracker:
    """Progress bar shared by concurrent trial workers."""

    def __init__(self, name: str, total: int, unit: str = "trials", enabled: Optional[bool] = None):
        self.name = name
        self.total = total
        self.completed = 0
        self.failures = 0
        self._lock = threading.Lock()
        self.progress_bar = tqdm(
            total=total,
            desc=name,
            unit=unit,
            leave=False,
            disable=not (settings.progress.enabled if enabled is None else enabled),
            bar_format=BAR_FORMAT,
        )

    def update(self, increment: int = 1, failed: int = 0):
        """Record finished trials; safe to call from worker threads."""
        with self._lock:
            self.completed += increment
            self.failures += failed
            self.progress_bar.update(increment)

    def finish(self, elapsed: Optional[float] = None):
        """Close the bar and log a one-line summary."""
        self.progress_bar.close()
        if elapsed is not None:
            rate = self.completed / elapsed if elapsed > 0 else 0
            logger.info(
                f"{self.name}: {self.completed}/{self.total} done in {elapsed:.2f}s "
                f"({rate:.1f}/sec, {self.failures} misclassified)"
            )

    def __enter__(self) -> "TrialProgressTracker":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.progress_bar.close()
        return False
