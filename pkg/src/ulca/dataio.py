"""CSV loading and writing for datasets, projections, and embeddings.

Dataset CSVs have a header row, one designated label column, and
numeric attribute columns (UTF-8, ``.`` decimal point).  Label values
may be arbitrary strings; they are mapped to group indices 1..c in
sorted order, with the original strings kept as group names.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .group_stats import Dataset

__all__ = ["load_csv_dataset", "parse_csv_text", "write_matrix_csv"]


def parse_csv_text(
    text: str, label_col: str, source: str | None = None
) -> Dataset:
    """Parse CSV content into a labeled Dataset."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("CSV is empty") from None
    header = [h.strip() for h in header]
    if label_col not in header:
        raise DataFormatError(
            f"label column {label_col!r} not found; columns are {header}"
        )
    label_idx = header.index(label_col)
    feature_names = [h for i, h in enumerate(header) if i != label_idx]
    if not feature_names:
        raise DataFormatError("no attribute columns besides the label")

    rows: list[list[float]] = []
    labels: list[str] = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not cell.strip() for cell in rec):
            continue
        if len(rec) != len(header):
            raise DataFormatError(
                f"line {lineno}: expected {len(header)} fields, got {len(rec)}"
            )
        labels.append(rec[label_idx].strip())
        try:
            rows.append(
                [float(cell) for i, cell in enumerate(rec) if i != label_idx]
            )
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise DataFormatError("CSV has a header but no data rows")

    group_names = sorted(set(labels))
    index = {name: j for j, name in enumerate(group_names, start=1)}
    y = np.array([index[name] for name in labels], dtype=int)
    return Dataset(
        X=np.array(rows, dtype=float),
        y=y,
        n_groups=len(group_names),
        feature_names=feature_names,
        group_names=group_names,
        source=source,
    )


def load_csv_dataset(path: str | Path, label_col: str) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    return parse_csv_text(text, label_col, source=str(path))


def write_matrix_csv(path: str | Path, matrix: np.ndarray, header: list[str]) -> None:
    """Write a matrix as CSV with full-precision floats."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != len(header):
        raise DataFormatError(
            f"{len(header)} header fields for {matrix.shape[1]} columns"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])
