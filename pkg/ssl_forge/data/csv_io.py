"""
CSV ingestion and export.

Format: comma separator, mandatory header, UTF-8, unquoted numeric fields.
An empty cell in the label column marks the row as unlabeled.
"""
import csv
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from ssl_forge.core.dataset import SSLDataset, frozen_array
from ssl_forge.core.exceptions import DataValidationError


logger = logging.getLogger(__name__)


def parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataValidationError(f"unparseable numeric cell {cell!r} at (row {row}, column {column!r})")
    if not math.isfinite(value):
        raise DataValidationError(f"non-finite numeric cell {cell!r} at (row {row}, column {column!r})")
    return value


def coerce_labels(labels: List[str], label_kind: str, rows: List[int], column: str) -> np.ndarray:
    if label_kind == "real":
        return np.array([parse_float(v, r, column) for v, r in zip(labels, rows)], dtype=np.float64)
    try:
        return np.array([int(v) for v in labels], dtype=np.int64)
    except ValueError:
        return np.array(labels, dtype=object).astype(str)


def load_csv(path: str, label_column: str, label_kind: str = "class") -> SSLDataset:
    """
    Load a CSV file into an SSLDataset.

    Every column other than `label_column` is a feature. Rows whose label
    cell is empty become unlabeled_X. With label_kind="class", labels are
    kept as integers when all of them parse as integers, else as strings;
    label_kind="real" parses them as floats.
    """
    if label_kind not in ("class", "real"):
        raise DataValidationError(f"label_kind must be 'class' or 'real', got {label_kind!r}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: missing header row")
        header = [name.strip() for name in header]
        if label_column not in header:
            raise DataValidationError(f"{path}: label column {label_column!r} not in header {header}")
        label_index = header.index(label_column)
        feature_names = [name for i, name in enumerate(header) if i != label_index]
        if not feature_names:
            raise DataValidationError(f"{path}: no feature columns")

        labeled_rows, unlabeled_rows, labels, label_rows = [], [], [], []
        for row_number, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise DataValidationError(
                    f"{path}: row {row_number} has {len(cells)} cells, expected {len(header)}"
                )
            features = [
                parse_float(cell.strip(), row_number, header[i])
                for i, cell in enumerate(cells) if i != label_index
            ]
            label = cells[label_index].strip()
            if label == "":
                unlabeled_rows.append(features)
            else:
                labeled_rows.append(features)
                labels.append(label)
                label_rows.append(row_number)

    if not labeled_rows:
        raise DataValidationError(f"{path}: zero labeled rows")
    n_features = len(feature_names)
    X = np.array(labeled_rows, dtype=np.float64).reshape(-1, n_features)
    unlabeled_X = np.array(unlabeled_rows, dtype=np.float64).reshape(-1, n_features)
    y = coerce_labels(labels, label_kind, label_rows, label_column)
    logger.info(f"Loaded {path}: {X.shape[0]} labeled, {unlabeled_X.shape[0]} unlabeled rows, {n_features} features")
    return SSLDataset(X=frozen_array(X), y=frozen_array(y), unlabeled_X=frozen_array(unlabeled_X))


def _format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(
    path: str,
    X: np.ndarray,
    y: Sequence,
    label_column: str = "label",
    feature_names: Optional[List[str]] = None,
    unlabeled_X: Optional[np.ndarray] = None
) -> int:
    """Write labeled rows, then unlabeled rows with an empty label cell. Returns the row count."""
    X = np.asarray(X, dtype=np.float64)
    feature_names = feature_names or [f"x{i}" for i in range(X.shape[1])]
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(feature_names + [label_column])
        for features, label in zip(X, y):
            writer.writerow([_format_value(v) for v in features] + [_format_value(label)])
            rows += 1
        if unlabeled_X is not None:
            for features in np.asarray(unlabeled_X, dtype=np.float64):
                writer.writerow([_format_value(v) for v in features] + [""])
                rows += 1
    return rows
