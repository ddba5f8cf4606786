"""
Report Writer for Verification Outputs.

This module provides the ReportWriter class, which writes structured
summaries as JSON and tables as CSV into one output directory. CSV
numbers use 17 significant digits with '.' as decimal separator, so
repeated runs of the same scenario produce identical files.

Example:
    >>> from src.data.report_writer import ReportWriter
    >>> writer = ReportWriter("output/barenblatt")
    >>> writer.write_summary({"passed": True})
    >>> writer.write_table(report.points, "points.csv")
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

from src.utils.config import CSV_FLOAT_FORMAT, SUMMARY_FILENAME

logger = logging.getLogger(__name__)


class ReportWriteError(Exception):
    """Raised when an output file cannot be written."""

    def __init__(self, path: Path, detail: str):
        self.path = path
        super().__init__(f"Failed to write {path}: {detail}")


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy scalars, enums and non-finite floats into JSON-safe values.

    NaN becomes None; +-inf become the strings "inf" / "-inf".
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(value, "value") and not isinstance(value, (str, int)):
        return to_jsonable(value.value)
    return value


class ReportWriter:
    """
    Writes summaries and tables for one scenario run.

    Attributes:
        out_dir: Directory receiving every file; created on first use.
    """

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)

    def _path(self, filename: str) -> Path:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportWriteError(self.out_dir, str(e))
        return self.out_dir / filename

    def write_summary(self, summary: dict, filename: str = SUMMARY_FILENAME) -> Path:
        """
        Write a summary dictionary as sorted, indented JSON.

        Returns:
            Path of the written file.
        """
        path = self._path(filename)
        try:
            with open(path, "w") as f:
                json.dump(to_jsonable(summary), f, indent=2, sort_keys=True)
                f.write("\n")
        except (OSError, TypeError) as e:
            raise ReportWriteError(path, str(e))
        logger.info("Wrote summary %s", path)
        return path

    def write_table(self, df: pd.DataFrame, filename: str) -> Path:
        """Write a DataFrame as CSV without the index."""
        path = self._path(filename)
        try:
            df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        except OSError as e:
            raise ReportWriteError(path, str(e))
        logger.info("Wrote %d rows to %s", len(df), path)
        return path
