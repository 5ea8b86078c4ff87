"""Load numeric tabular data from local CSV files.

Loading is strict: every referenced cell must parse as a finite number, and
failures name the offending line and column.  No rows are reordered and
nothing is fetched over the network.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FeatureMatrix, InvalidDataError, InvalidParameterError, MultiAnnotatedDataset

__all__ = ["CsvSchema", "load_csv"]


@dataclass(frozen=True)
class CsvSchema:
    """Where a CSV lives and how to read labels and features out of it.

    ``target_column`` and ``feature_columns`` accept header names (when the
    file has a header) or zero-based column indices.  ``feature_columns``
    of None means every column except the target.
    """

    path: str | Path
    target_column: str | int
    feature_columns: tuple[str | int, ...] | None = None
    has_header: bool = True
    delimiter: str = ","

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise InvalidParameterError(f"delimiter must be a single character, got {self.delimiter!r}")
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))


def _resolve_column(ref: str | int, header: list[str] | None, width: int, what: str) -> int:
    if isinstance(ref, bool) or ref is None:
        raise InvalidParameterError(f"{what} must be a column name or index, got {ref!r}")
    if isinstance(ref, int):
        if not (0 <= ref < width):
            raise InvalidDataError(f"{what} index {ref} out of range for {width} columns")
        return ref
    if header is None:
        raise InvalidDataError(f"{what} {ref!r} is a name but the file has no header")
    matches = [i for i, name in enumerate(header) if name == ref]
    if not matches:
        raise InvalidDataError(f"{what} {ref!r} not found in header {header}")
    if len(matches) > 1:
        raise InvalidDataError(f"{what} {ref!r} is ambiguous: header repeats it at columns {matches}")
    return matches[0]


def load_csv(schema: CsvSchema) -> MultiAnnotatedDataset:
    """Read a CSV into features plus true labels (annotations stay empty).

    Row order follows the file.  Values round-trip exactly for decimal
    literals of up to 15 significant digits.  Parse failures raise with the
    1-based line and column of each offending cell (up to the first ten).
    """
    path = Path(schema.path)
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle, delimiter=schema.delimiter))
    except OSError as exc:
        raise InvalidDataError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in rows if row]  # tolerate trailing blank lines
    if not rows:
        raise InvalidDataError(f"{path} is empty")

    header = None
    data_rows = rows
    first_line = 1
    if schema.has_header:
        header = [cell.strip() for cell in rows[0]]
        data_rows = rows[1:]
        first_line = 2
    if not data_rows:
        raise InvalidDataError(f"{path} has a header but no data rows")

    width = len(data_rows[0])
    ragged = [
        (first_line + i, len(row)) for i, row in enumerate(data_rows) if len(row) != width
    ]
    if ragged:
        line, got = ragged[0]
        raise InvalidDataError(f"{path}: line {line} has {got} cells, expected {width}")

    target = _resolve_column(schema.target_column, header, width, "target column")
    if schema.feature_columns is None:
        features = [i for i in range(width) if i != target]
    else:
        features = [
            _resolve_column(ref, header, width, "feature column") for ref in schema.feature_columns
        ]
        if target in features:
            raise InvalidDataError("target column also listed among feature columns")
    if not features:
        raise InvalidDataError("no feature columns remain after removing the target")

    wanted = features + [target]
    values = np.empty((len(data_rows), len(wanted)))
    bad: list[tuple[int, int]] = []
    for i, row in enumerate(data_rows):
        for k, col in enumerate(wanted):
            cell = row[col].strip()
            try:
                parsed = float(cell)
            except ValueError:
                parsed = np.nan
            if not np.isfinite(parsed):
                bad.append((first_line + i, col + 1))
                if len(bad) >= 10:
                    break
            values[i, k] = parsed
        if len(bad) >= 10:
            break
    if bad:
        places = "; ".join(f"line {line}, column {col}" for line, col in bad)
        raise InvalidDataError(f"{path}: non-numeric or missing cells at {places}")

    return MultiAnnotatedDataset(
        features=FeatureMatrix(values[:, :-1]),
        annotations=None,
        true_labels=values[:, -1],
    )
