"""
Universal data model: feature matrices, label arrays, SSL datasets and predictions.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from ssl_forge.core.exceptions import DataValidationError, DegenerateProblemError


class TaskKind(str, Enum):
    """Kind of learning task an estimator solves."""
    CLASSIFICATION = "classification"
    REGRESSION = "regression"
    CLUSTERING = "clustering"


def frozen_array(values, dtype=None) -> np.ndarray:
    """Read-only copy of `values`."""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def as_feature_matrix(values, name: str = "X", n_features: Optional[int] = None) -> np.ndarray:
    """Coerce to a 2-D float64 matrix; a missing matrix becomes 0 rows."""
    if values is None:
        if n_features is None:
            raise DataValidationError(f"{name} is missing")
        return np.zeros((0, n_features))
    try:
        matrix = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DataValidationError(f"{name} is not numeric: {e}") from e
    if matrix.ndim == 1 and matrix.size == 0 and n_features is not None:
        matrix = matrix.reshape(0, n_features)
    if matrix.ndim != 2:
        raise DataValidationError(f"{name} must be 2-dimensional, got shape {matrix.shape}")
    return matrix


def check_finite(matrix: np.ndarray, name: str) -> None:
    if matrix.size and not np.all(np.isfinite(matrix)):
        row, col = np.argwhere(~np.isfinite(matrix))[0]
        raise DataValidationError(f"non-finite value in {name} at ({row}, {col})")


@dataclass(frozen=True)
class SSLDataset:
    """Labeled matrix X with labels y, plus an unlabeled matrix of the same width."""
    X: np.ndarray
    y: np.ndarray
    unlabeled_X: np.ndarray
    classes: Optional[np.ndarray] = None

    @classmethod
    def build(cls, X, y, unlabeled_X=None) -> "SSLDataset":
        """Create a dataset from array-likes; `unlabeled_X=None` means no unlabeled rows."""
        X = as_feature_matrix(X, "X")
        unlabeled_X = as_feature_matrix(unlabeled_X, "unlabeled_X", n_features=X.shape[1])
        return cls(X=frozen_array(X), y=frozen_array(np.asarray(y)), unlabeled_X=frozen_array(unlabeled_X))

    @property
    def n_labeled(self) -> int:
        return self.X.shape[0]

    @property
    def n_unlabeled(self) -> int:
        return self.unlabeled_X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return 0 if self.classes is None else len(self.classes)

    @property
    def X_all(self) -> np.ndarray:
        """Labeled rows first, then unlabeled rows."""
        return np.vstack([self.X, self.unlabeled_X])

    def with_features(self, X: np.ndarray, unlabeled_X: np.ndarray) -> "SSLDataset":
        """Same labels, new feature matrices."""
        return SSLDataset(X=frozen_array(X), y=self.y, unlabeled_X=frozen_array(unlabeled_X), classes=self.classes)

    def to_dict(self) -> Dict[str, Any]:
        """Summary of the dataset shape."""
        return {
            "n_labeled": self.n_labeled,
            "n_unlabeled": self.n_unlabeled,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
        }


@dataclass(frozen=True)
class Prediction:
    """Hard labels plus an optional per-class score matrix."""
    labels: np.ndarray
    scores: Optional[np.ndarray] = None
    probabilistic: bool = False
    extras: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)


def argmax_lowest(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; exact ties go to the lowest column index."""
    if scores.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmax(scores, axis=1).astype(np.int64)


def normalize_rows(scores: np.ndarray) -> np.ndarray:
    """Rows scaled to sum 1; all-zero rows become uniform."""
    totals = scores.sum(axis=1, keepdims=True)
    n_cols = scores.shape[1]
    out = np.full_like(scores, 1.0 / n_cols, dtype=np.float64)
    nonzero = totals[:, 0] > 0
    out[nonzero] = scores[nonzero] / totals[nonzero]
    return out


def validate_dataset(d: SSLDataset, kind: TaskKind) -> SSLDataset:
    """
    Check the dataset invariants and encode labels.

    Classification and clustering labels are re-indexed to dense 0..K-1 with
    the original values kept in `classes`; regression labels are coerced to
    float64. A classification dataset with a single labeled class is
    rejected as degenerate.
    """
    X = as_feature_matrix(d.X, "X")
    unlabeled_X = as_feature_matrix(d.unlabeled_X, "unlabeled_X", n_features=X.shape[1])
    y = np.asarray(d.y)

    if X.shape[1] < 1:
        raise DataValidationError("feature matrices need at least one column")
    if X.shape[0] < 1:
        raise DataValidationError("empty labeled set")
    if unlabeled_X.shape[1] != X.shape[1]:
        raise DataValidationError(
            f"feature-dimension mismatch: X has {X.shape[1]} columns, unlabeled_X has {unlabeled_X.shape[1]}"
        )
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DataValidationError(f"label count {y.shape[0] if y.ndim else 0} does not match {X.shape[0]} labeled rows")
    check_finite(X, "X")
    check_finite(unlabeled_X, "unlabeled_X")

    if kind == TaskKind.REGRESSION:
        try:
            targets = y.astype(np.float64)
        except (TypeError, ValueError) as e:
            raise DataValidationError(f"regression targets are not numeric: {e}") from e
        check_finite(targets.reshape(-1, 1), "y")
        return SSLDataset(X=frozen_array(X), y=frozen_array(targets), unlabeled_X=frozen_array(unlabeled_X))

    if y.dtype.kind in "fc":
        check_finite(y.astype(np.float64).reshape(-1, 1), "y")
    classes, encoded = np.unique(y, return_inverse=True)
    if kind == TaskKind.CLASSIFICATION and len(classes) < 2:
        raise DegenerateProblemError(
            f"degenerate labeled set: only one class ({classes[0]!r}) present"
        )
    return SSLDataset(
        X=frozen_array(X),
        y=frozen_array(encoded.astype(np.int64)),
        unlabeled_X=frozen_array(unlabeled_X),
        classes=frozen_array(classes),
    )


def check_features(X, n_features: int) -> np.ndarray:
    """Validate a prediction matrix against the training width."""
    matrix = as_feature_matrix(X, "X", n_features=n_features)
    if matrix.shape[0] == 0 and matrix.shape[1] == 0:
        matrix = matrix.reshape(0, n_features)
    if matrix.shape[1] != n_features:
        raise DataValidationError(
            f"feature-dimension mismatch: model was fitted on {n_features} columns, got {matrix.shape[1]}"
        )
    check_finite(matrix, "X")
    return matrix
