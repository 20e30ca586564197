"""
Base processor class for pipeline subcommands.
"""
import os
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from config.experiments import ExperimentConfig
from config.suites import suite_registry
from rscope.exceptions import ArgumentError, FormatError, RscopeError
from rscope.library import build_library, observe_library, read_library
from rscope.models import ObservedLibrary, RegimeLibrary, SensingOperator, SnapshotMatrix
from rscope.sensing import make_sensing
from rscope.snapshots import read_snapshots
from rscope.synthgen import gen_suite
from utils.csv_writer import CSVWriter
from utils.logger import logger

SUITE_INDEX = "suite.csv"
SNAPSHOT_DIR = "snapshots"
LIBRARY_DIR = "library"

Dataset = Tuple[str, float, SnapshotMatrix]


class BaseProcessor(ABC):
    """Base class for all subcommand processors.

    Subclasses implement :meth:`execute`; :meth:`process` adds timing,
    artifact bookkeeping and logging.
    """

    command: str = ""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.writer = CSVWriter(config.out)
        self.artifacts: List[str] = []
        self._train: Optional[List[Dataset]] = None
        self._test: Optional[List[SnapshotMatrix]] = None
        self._library: Optional[RegimeLibrary] = None

        logger.info(f"Initialized processor for command: {self.command}")

    @abstractmethod
    def execute(self) -> Dict[str, Any]:
        """Run the subcommand and return summary values."""
        pass

    def process(self) -> Dict[str, Any]:
        """Run the subcommand with timing and a result record."""
        start_time = time.time()
        logger.info(f"Starting {self.command} (seed {self.config.seed}, out {self.config.out})")

        try:
            summary = self.execute()
        except RscopeError as e:
            logger.error(f"{self.command} failed: {e.message}")
            raise

        total_time = time.time() - start_time
        result = {
            'command': self.command,
            'artifacts': list(self.artifacts),
            'total_time': total_time,
            'summary': summary,
            'success': True,
        }
        logger.info(f"Completed {self.command}: {len(self.artifacts)} artifacts in {total_time:.2f}s")
        return result

    def add_artifact(self, path: str) -> str:
        self.artifacts.append(path)
        return path

    def output_path(self, *parts: str) -> str:
        return os.path.join(self.config.out, *parts)

    # Data sources

    def _suite_split(self) -> Tuple[List[Dataset], List[SnapshotMatrix]]:
        suite = suite_registry.get_suite(self.config.suite)
        fraction = self.config.train_fraction if self.config.train_fraction is not None else suite.train_fraction
        j_max = self.config.j_max if self.config.j_max is not None else suite.j_max
        return gen_suite(suite.entries(), fraction, j_max)

    def _read_data_dir(self, directory: str) -> Tuple[List[Dataset], List[SnapshotMatrix]]:
        index_path = os.path.join(directory, SUITE_INDEX)
        if not os.path.isfile(index_path):
            raise FormatError(f"{directory}: missing {SUITE_INDEX}")
        try:
            index = pd.read_csv(index_path, dtype={"label": str, "split": str, "file": str})
        except (ValueError, pd.errors.ParserError) as e:
            raise FormatError(f"{index_path}: unreadable index ({str(e)})")
        missing = {"label", "parameter", "split", "file"} - set(index.columns)
        if missing:
            raise FormatError(f"{index_path}: missing columns {sorted(missing)}")

        train, test = [], []
        for row in index.itertuples(index=False):
            path = os.path.join(directory, row.file)
            if not os.path.isfile(path):
                raise FormatError(f"{index_path}: references missing snapshot file {row.file}")
            snap = read_snapshots(path, label=row.label)
            if row.split == "train":
                train.append((row.label, float(row.parameter), snap))
            elif row.split == "test":
                test.append(snap)
            else:
                raise FormatError(f"{index_path}: unknown split '{row.split}'")
        return train, test

    def load_datasets(self) -> Tuple[List[Dataset], List[SnapshotMatrix]]:
        """Train and test data from ``--data`` or, failing that, the configured suite."""
        if self._train is None:
            if self.config.data:
                self._train, self._test = self._read_data_dir(self.config.data)
            else:
                self._train, self._test = self._suite_split()
        return self._train, self._test

    def test_sets(self, lib: Optional[RegimeLibrary] = None) -> List[SnapshotMatrix]:
        """Test splits, checked against ``lib`` for state dimension and dt."""
        _, test = self.load_datasets()
        if not test:
            raise ArgumentError("No test data: use a train fraction below 1")
        if lib is not None:
            for snap in test:
                lib.check_snapshots(snap)
        return test

    def load_library(self) -> RegimeLibrary:
        """Library from ``--library`` or built in memory from the training data."""
        if self._library is None:
            if self.config.library:
                self._library = read_library(self.config.library)
            else:
                train, _ = self.load_datasets()
                self._library = build_library(train, self.config.policy())
        return self._library

    def grid(self, lib: RegimeLibrary):
        if lib.grid is not None:
            return lib.grid
        if self.config.data or not self.config.library:
            train, _ = self.load_datasets()
            return train[0][2].grid if train else None
        return None

    def make_operator(self, lib: RegimeLibrary, sensing=None) -> SensingOperator:
        spec = sensing if sensing is not None else self.config.sensing
        seed = spec.seed if spec.seed is not None else self.config.seed
        config = spec.to_sensing_config(lib.state_dim, self.grid(lib))
        config.seed = seed
        return make_sensing(spec.kind, config)

    def observe(self, lib: RegimeLibrary, j: Optional[int] = None,
                C: Optional[SensingOperator] = None) -> ObservedLibrary:
        operator = C if C is not None else self.make_operator(lib)
        return observe_library(lib, operator, self.config.j if j is None else j)

    def log_summary(self, result: Dict[str, Any]):
        """Log a summary of the run."""
        logger.info("=" * 60)
        logger.info(f"{self.command.upper()} SUMMARY")
        logger.info("=" * 60)
        logger.info(f"Total time: {result['total_time']:.2f} seconds")
        for key, value in result['summary'].items():
            if isinstance(value, float):
                value = f"{value:.6g}"
            logger.info(f"{key}: {value}")
        for path in result['artifacts']:
            logger.info(f"  -> {path}")
        logger.info("=" * 60)


def accuracy_percent(hits: int, total: int) -> float:
    return float(hits) / total * 100.0 if total else float("nan")
