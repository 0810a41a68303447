"""Delimited-text ingestion and writing for observation panels."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import CsvFormatError, DomainError
from .spectral import DataMatrix

__all__ = ["CsvLayout", "read_data_matrix", "write_data_matrix"]


@dataclass(frozen=True)
class CsvLayout:
    """How a delimited file maps onto a panel.

    With rows_are_observations (the default, the usual statistical layout)
    each file row is one observation vector; otherwise each column is.
    """

    rows_are_observations: bool = True
    has_header: bool = False
    delimiter: str = ","

    def __post_init__(self):
        if not (isinstance(self.delimiter, str) and len(self.delimiter) == 1):
            raise DomainError(f"delimiter must be a single character, got {self.delimiter!r}")


def read_data_matrix(path, layout: CsvLayout = CsvLayout()) -> DataMatrix:
    """Parse a delimited numeric file into a DataMatrix.

    Every cell must parse as a finite real; ragged rows, non-numeric cells
    and non-finite values are reported with their line number.
    """
    rows: list[list[float]] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter=layout.delimiter)
        skip_header = layout.has_header
        for lineno, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if skip_header:
                skip_header = False
                continue
            parsed = []
            for cell in row:
                text = cell.strip()
                try:
                    value = float(text)
                except ValueError:
                    raise CsvFormatError(
                        f"line {lineno}: cell {text!r} is not numeric") from None
                if not math.isfinite(value):
                    raise CsvFormatError(
                        f"line {lineno}: cell {text!r} is not a finite number")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CsvFormatError(
            f"{path}: ragged rows, found widths {sorted(widths)}")
    arr = np.asarray(rows, dtype=float)
    if layout.rows_are_observations:
        arr = arr.T
    return DataMatrix(arr)


def write_data_matrix(path, data: DataMatrix, layout: CsvLayout = CsvLayout()) -> None:
    """Write a panel back to a delimited file; cells use repr so values round-trip."""
    arr = data.values if not layout.rows_are_observations else data.values.T
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, delimiter=layout.delimiter)
        if layout.has_header:
            prefix = "obs" if not layout.rows_are_observations else "var"
            writer.writerow(f"{prefix}{j}" for j in range(arr.shape[1]))
        for row in arr:
            writer.writerow(repr(float(v)) for v in row)
