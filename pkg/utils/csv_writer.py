"""
CSV writing utilities for regime-scope artifacts.
"""
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config.settings import settings
from utils.logger import logger


def format_float(value: float) -> str:
    """Shortest text that parses back to the same f64."""
    return repr(float(value))


class CSVWriter:
    """Handles CSV artifact writing."""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = output_dir or settings.output.data_directory

    def ensure_output_directory(self):
        """Ensure the output directory exists."""
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)
            logger.info(f"Created output directory: {self.output_dir}")

    def _path(self, name: str) -> str:
        self.ensure_output_directory()
        filename = name if name.endswith(".csv") else f"{name}.csv"
        return os.path.join(self.output_dir, filename)

    def write_frame(self, name: str, frame: pd.DataFrame, index: bool = False) -> str:
        """Write a DataFrame with round-trip float text and CRLF rows."""
        filepath = self._path(name)
        rendered = frame.copy()
        for column in rendered.columns:
            if pd.api.types.is_float_dtype(rendered[column]):
                rendered[column] = rendered[column].map(format_float)
        if index and rendered.index.dtype.kind == "f":
            rendered.index = [format_float(value) for value in rendered.index]

        try:
            rendered.to_csv(
                filepath,
                index=index,
                header=settings.output.include_headers,
                encoding=settings.output.csv_encoding,
                sep=settings.output.csv_delimiter,
                lineterminator=settings.output.csv_lineterminator,
            )
        except OSError as e:
            logger.error(f"Error writing CSV file {filepath}: {str(e)}")
            raise

        logger.debug(f"Wrote {len(frame)} rows to {filepath}")
        return filepath

    def write_matrix(self, name: str, values: np.ndarray, row_labels: Sequence[str],
                     col_labels: Sequence[str], corner: str = "regime") -> str:
        """Write a labelled matrix (regime labels as row and column headers)."""
        frame = pd.DataFrame(np.asarray(values, dtype=np.float64),
                             index=pd.Index(list(row_labels), name=corner),
                             columns=list(col_labels))
        return self.write_frame(name, frame, index=True)

    def write_records(self, name: str, records: List[Dict[str, Any]],
                      fieldnames: Optional[List[str]] = None) -> str:
        """Write long-format records; column order follows ``fieldnames`` or first appearance."""
        if not records:
            logger.warning(f"No records to write for {name}")
        if not fieldnames:
            fieldnames = []
            for record in records:
                fieldnames.extend(key for key in record if key not in fieldnames)
        frame = pd.DataFrame.from_records(records, columns=fieldnames)
        return self.write_frame(name, frame)
