"""
Configuration settings for the regime-scope toolkit.
"""
import os
from dataclasses import dataclass, field
from typing import Tuple

from dotenv import load_dotenv


@dataclass
class ComputeConfig:
    """Configuration for parallel work."""
    threads: int = 1


@dataclass
class NumericsConfig:
    """Configuration for numerical tolerances."""
    sigma_rel_floor: float = 1e-12
    eig_condition_warning: float = 1e12
    max_eigen_modulus: float = 1.05
    conjugate_tolerance: float = 1e-10


@dataclass
class SensingDefaults:
    """Defaults for measurement operator construction."""
    boundary_offset: int = 1
    velocity_fields: Tuple[str, ...] = ("ux", "uy", "u", "v")


@dataclass
class LoggingConfig:
    """Configuration for logging."""
    log_file: str = "logs/rscope.log"
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    overwrite_on_run: bool = True


@dataclass
class OutputConfig:
    """Configuration for output settings."""
    data_directory: str = "artifacts"
    csv_encoding: str = "utf-8"
    csv_delimiter: str = ","
    csv_lineterminator: str = "\r\n"
    include_headers: bool = True


@dataclass
class ProgressConfig:
    """Configuration for progress bars."""
    enabled: bool = True


class Settings:
    """Main settings class."""

    def __init__(self):
        self.compute = ComputeConfig()
        self.numerics = NumericsConfig()
        self.sensing = SensingDefaults()
        self.logging = LoggingConfig()
        self.output = OutputConfig()
        self.progress = ProgressConfig()

        # Load environment variables
        self._load_from_env()

    def _load_from_env(self):
        """Load settings from environment variables."""
        load_dotenv()

        if os.getenv("RSCOPE_THREADS"):
            self.compute.threads = max(1, int(os.getenv("RSCOPE_THREADS")))

        if os.getenv("RSCOPE_SIGMA_FLOOR"):
            self.numerics.sigma_rel_floor = float(os.getenv("RSCOPE_SIGMA_FLOOR"))

        if os.getenv("RSCOPE_LOG_LEVEL"):
            self.logging.log_level = os.getenv("RSCOPE_LOG_LEVEL")

        if os.getenv("RSCOPE_LOG_FILE"):
            self.logging.log_file = os.getenv("RSCOPE_LOG_FILE")

        if os.getenv("RSCOPE_OUTPUT_DIR"):
            self.output.data_directory = os.getenv("RSCOPE_OUTPUT_DIR")

        if os.getenv("RSCOPE_PROGRESS"):
            self.progress.enabled = os.getenv("RSCOPE_PROGRESS").strip().lower() not in ("0", "false", "no")


# Global settings instance
settings = Settings()
