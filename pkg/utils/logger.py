"""
Logging utilities for the regime-scope toolkit.
"""
import logging
import os
import sys

from tqdm import tqdm

from config.settings import settings


class TqdmConsoleHandler(logging.Handler):
    """Console handler that prints above active progress bars."""

    def emit(self, record: logging.LogRecord):
        try:
            tqdm.write(self.format(record), file=sys.stderr)
        except Exception:
            self.handleError(record)


class RscopeLogger:
    """Process-wide logger for library and CLI code."""

    def __init__(self, name: str = "rscope"):
        self.name = name
        self.logger = None
        self._setup_logger()

    def _file_handler(self, level: int, formatter: logging.Formatter):
        log_file = settings.logging.log_file
        log_dir = os.path.dirname(log_file)
        try:
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)
        except OSError:
            # read-only checkouts still get console logging
            return None
        mode = 'w' if settings.logging.overwrite_on_run else 'a'
        handler = logging.FileHandler(log_file, mode=mode, encoding="utf-8", delay=True)
        handler.setLevel(level)
        handler.setFormatter(formatter)
        return handler

    def _setup_logger(self):
        """Set up the logger with file and console handlers."""
        level = getattr(logging, settings.logging.log_level.upper(), logging.INFO)
        self.logger = logging.getLogger(self.name)
        self.logger.setLevel(level)
        self.logger.propagate = False
        self.logger.handlers.clear()

        formatter = logging.Formatter(settings.logging.log_format)
        file_handler = self._file_handler(level, formatter)
        if file_handler is not None:
            self.logger.addHandler(file_handler)

        # DEBUG numerics go to the file only
        console_handler = TqdmConsoleHandler()
        console_handler.setLevel(max(level, logging.INFO))
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

    def info(self, message: str, **kwargs):
        """Log info message."""
        self.logger.info(message, **kwargs)

    def debug(self, message: str, **kwargs):
        self.logger.debug(message, **kwargs)

    def warning(self, message: str, **kwargs):
        self.logger.warning(message, **kwargs)

    def error(self, message: str, **kwargs):
        self.logger.error(message, **kwargs)

    def exception(self, message: str, **kwargs):
        """Log exception with traceback."""
        self.logger.exception(message, **kwargs)


# Global logger instance
logger = RscopeLogger()
