"""
Evaluation metrics for classification, regression and clustering.

Sixteen metric families: accuracy, precision_macro, recall_macro, f1_macro,
f1_micro, confusion_matrix, log_loss, top_k_accuracy (k=2); mse, rmse, mae,
r2, mape; ari, nmi, fmi, purity. rmse is reported next to mse but counted
with it as one family.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.special import comb

from ssl_forge.core.dataset import TaskKind
from ssl_forge.core.exceptions import DataValidationError, UnknownComponentError


logger = logging.getLogger(__name__)

PROBABILITY_CLIP = 1e-15


@dataclass
class MetricReport:
    """Metric name -> value, plus the confusion matrix for classification."""
    task: TaskKind
    values: Dict[str, float] = field(default_factory=dict)
    confusion_matrix: Optional[np.ndarray] = None
    labels: Optional[List[Any]] = None
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"task": self.task.value, **{k: float(v) for k, v in self.values.items()}}
        if self.confusion_matrix is not None:
            data["confusion_matrix"] = self.confusion_matrix.tolist()
            data["labels"] = [v.item() if isinstance(v, np.generic) else v for v in self.labels]
        if self.warnings:
            data["warnings"] = list(self.warnings)
        return data


def _pair(y_true, y_pred):
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DataValidationError(f"metric inputs need equal 1-D shapes, got {y_true.shape} and {y_pred.shape}")
    if y_true.size == 0:
        raise DataValidationError("metrics need at least one sample")
    return y_true, y_pred


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.mean(y_true == y_pred))


def confusion_matrix(y_true, y_pred, labels=None):
    """Counts with rows = true label, columns = predicted label, over the sorted label union."""
    y_true, y_pred = _pair(y_true, y_pred)
    labels = np.unique(np.concatenate([y_true, y_pred])) if labels is None else np.asarray(labels)
    t = np.searchsorted(labels, y_true)
    p = np.searchsorted(labels, y_pred)
    matrix = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(matrix, (t, p), 1)
    return matrix, labels


def _per_class(matrix: np.ndarray, labels, log: logging.Logger, warnings: Optional[List[str]] = None):
    tp = np.diag(matrix).astype(np.float64)
    predicted = matrix.sum(axis=0).astype(np.float64)
    actual = matrix.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    absent = [labels[i] for i in np.flatnonzero(actual == 0)]
    if absent:
        message = f"classes {list(absent)} are absent from y_true; their recall counts as 0"
        log.warning(message)
        if warnings is not None:
            warnings.append(message)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return precision, recall, f1


def precision_macro(y_true, y_pred, log: logging.Logger = logger) -> float:
    matrix, labels = confusion_matrix(y_true, y_pred)
    return float(np.mean(_per_class(matrix, labels, log)[0]))


def recall_macro(y_true, y_pred, log: logging.Logger = logger) -> float:
    matrix, labels = confusion_matrix(y_true, y_pred)
    return float(np.mean(_per_class(matrix, labels, log)[1]))


def f1_macro(y_true, y_pred, log: logging.Logger = logger) -> float:
    matrix, labels = confusion_matrix(y_true, y_pred)
    return float(np.mean(_per_class(matrix, labels, log)[2]))


def f1_micro(y_true, y_pred) -> float:
    """Equals accuracy for single-label problems."""
    return accuracy(y_true, y_pred)


def _true_columns(y_true, n_columns: int, classes=None) -> np.ndarray:
    """Score-column index of every true label; -1 when the label has no column."""
    y_true = np.asarray(y_true)
    if classes is None:
        columns = y_true.astype(np.int64)
        return np.where((columns >= 0) & (columns < n_columns), columns, -1)
    classes = np.asarray(classes)
    lookup = {value.item() if isinstance(value, np.generic) else value: i for i, value in enumerate(classes)}
    return np.array([lookup.get(v.item() if isinstance(v, np.generic) else v, -1) for v in y_true], dtype=np.int64)


def log_loss(y_true, scores, classes=None) -> float:
    """Mean negative log-probability of the true class, probabilities clipped to [1e-15, 1 - 1e-15]."""
    scores = np.asarray(scores, dtype=np.float64)
    columns = _true_columns(y_true, scores.shape[1], classes)
    if len(columns) != scores.shape[0]:
        raise DataValidationError("log_loss needs one score row per label")
    p = np.where(columns >= 0, scores[np.arange(len(columns)), np.maximum(columns, 0)], 0.0)
    p = np.clip(p, PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP)
    return float(-np.mean(np.log(p)))


def top_k_accuracy(y_true, scores, k: int = 2, classes=None) -> float:
    """Share of rows whose true class is among the k highest scores (ties to the lower column)."""
    scores = np.asarray(scores, dtype=np.float64)
    columns = _true_columns(y_true, scores.shape[1], classes)
    top = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    return float(np.mean(np.any(top == columns[:, None], axis=1)))


def classification_metrics(y_true, y_pred, scores=None, classes=None, log: logging.Logger = logger) -> MetricReport:
    matrix, labels = confusion_matrix(y_true, y_pred)
    report = MetricReport(task=TaskKind.CLASSIFICATION, confusion_matrix=matrix, labels=list(labels))
    precision, recall, f1 = _per_class(matrix, labels, log, report.warnings)
    report.values = {
        "accuracy": accuracy(y_true, y_pred),
        "precision_macro": float(np.mean(precision)),
        "recall_macro": float(np.mean(recall)),
        "f1_macro": float(np.mean(f1)),
        "f1_micro": f1_micro(y_true, y_pred),
    }
    if scores is not None:
        report.values["log_loss"] = log_loss(y_true, scores, classes)
        report.values["top_k_accuracy"] = top_k_accuracy(y_true, scores, 2, classes)
    return report


# ---------------------------------------------------------------------------
# Regression
# ---------------------------------------------------------------------------


def _real_pair(y_true, y_pred):
    y_true, y_pred = _pair(y_true, y_pred)
    return y_true.astype(np.float64), y_pred.astype(np.float64)


def mean_squared_error(y_true, y_pred) -> float:
    y_true, y_pred = _real_pair(y_true, y_pred)
    return float(np.mean((y_true - y_pred) ** 2))


def root_mean_squared_error(y_true, y_pred) -> float:
    return float(np.sqrt(mean_squared_error(y_true, y_pred)))


def mean_absolute_error(y_true, y_pred) -> float:
    y_true, y_pred = _real_pair(y_true, y_pred)
    return float(np.mean(np.abs(y_true - y_pred)))


def r2_score(y_true, y_pred, log: logging.Logger = logger) -> float:
    """1 - SS_res / SS_tot; a constant target gives 1.0 when predicted exactly, else 0.0."""
    y_true, y_pred = _real_pair(y_true, y_pred)
    if y_true.size < 2:
        raise DataValidationError("r2 needs at least two samples")
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        log.warning("r2 of a constant target is undefined; reporting 1.0 for exact and 0.0 otherwise")
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def mean_absolute_percentage_error(y_true, y_pred, log: logging.Logger = logger) -> float:
    """Mean |(y - y_hat) / y| over nonzero targets."""
    y_true, y_pred = _real_pair(y_true, y_pred)
    nonzero = y_true != 0
    if not np.all(nonzero):
        log.warning(f"mape skips {int(np.sum(~nonzero))} zero targets")
    if not np.any(nonzero):
        return float("nan")
    return float(np.mean(np.abs((y_true[nonzero] - y_pred[nonzero]) / y_true[nonzero])))


def regression_metrics(y_true, y_pred, log: logging.Logger = logger) -> MetricReport:
    mse = mean_squared_error(y_true, y_pred)
    return MetricReport(task=TaskKind.REGRESSION, values={
        "mse": mse,
        "rmse": float(np.sqrt(mse)),
        "mae": mean_absolute_error(y_true, y_pred),
        "r2": r2_score(y_true, y_pred, log),
        "mape": mean_absolute_percentage_error(y_true, y_pred, log),
    })


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


def contingency_table(labels_true, labels_pred) -> np.ndarray:
    labels_true, labels_pred = _pair(labels_true, labels_pred)
    _, t = np.unique(labels_true, return_inverse=True)
    _, p = np.unique(labels_pred, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def adjusted_rand_index(labels_true, labels_pred) -> float:
    """Pair-counting Rand index adjusted for chance; 1.0 when both labelings are trivial and equal."""
    table = contingency_table(labels_true, labels_pred)
    n = int(table.sum())
    index = float(comb(table, 2).sum())
    rows = float(comb(table.sum(axis=1), 2).sum())
    cols = float(comb(table.sum(axis=0), 2).sum())
    expected = rows * cols / float(comb(n, 2)) if n > 1 else 0.0
    maximum = 0.5 * (rows + cols)
    if maximum == expected:
        return 1.0
    return (index - expected) / (maximum - expected)


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def normalized_mutual_info(labels_true, labels_pred) -> float:
    """Mutual information over the arithmetic mean of the two entropies."""
    table = contingency_table(labels_true, labels_pred).astype(np.float64)
    n = table.sum()
    h_true, h_pred = _entropy(table.sum(axis=1)), _entropy(table.sum(axis=0))
    if h_true == 0.0 and h_pred == 0.0:
        return 1.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nonzero = joint > 0
    mi = float(np.sum(joint[nonzero] * np.log(joint[nonzero] / outer[nonzero])))
    return max(0.0, min(1.0, mi / (0.5 * (h_true + h_pred))))


def fowlkes_mallows_index(labels_true, labels_pred) -> float:
    table = contingency_table(labels_true, labels_pred)
    tk = float(comb(table, 2).sum())
    pk = float(comb(table.sum(axis=0), 2).sum())
    qk = float(comb(table.sum(axis=1), 2).sum())
    if pk == 0.0 or qk == 0.0:
        return 1.0 if pk == qk == tk else 0.0
    return tk / np.sqrt(pk * qk)


def purity(labels_true, labels_pred) -> float:
    """Sum over predicted clusters of their largest true-class overlap, over n."""
    table = contingency_table(labels_true, labels_pred)
    return float(table.max(axis=0).sum() / table.sum())


def clustering_metrics(labels_true, labels_pred) -> MetricReport:
    return MetricReport(task=TaskKind.CLUSTERING, values={
        "ari": adjusted_rand_index(labels_true, labels_pred),
        "nmi": normalized_mutual_info(labels_true, labels_pred),
        "fmi": fowlkes_mallows_index(labels_true, labels_pred),
        "purity": purity(labels_true, labels_pred),
    })


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricInfo:
    name: str
    task: TaskKind
    greater_is_better: bool
    needs_scores: bool
    fn: Callable[..., float]


def _labels(fn):
    return lambda y_true, y_pred, scores=None, classes=None: fn(y_true, y_pred)


def _scored(fn):
    return lambda y_true, y_pred, scores=None, classes=None: fn(y_true, scores, classes=classes)


METRICS: Dict[str, MetricInfo] = {info.name: info for info in [
    MetricInfo("accuracy", TaskKind.CLASSIFICATION, True, False, _labels(accuracy)),
    MetricInfo("precision_macro", TaskKind.CLASSIFICATION, True, False, _labels(precision_macro)),
    MetricInfo("recall_macro", TaskKind.CLASSIFICATION, True, False, _labels(recall_macro)),
    MetricInfo("f1_macro", TaskKind.CLASSIFICATION, True, False, _labels(f1_macro)),
    MetricInfo("f1_micro", TaskKind.CLASSIFICATION, True, False, _labels(f1_micro)),
    MetricInfo("log_loss", TaskKind.CLASSIFICATION, False, True, _scored(log_loss)),
    MetricInfo("top_k_accuracy", TaskKind.CLASSIFICATION, True, True, _scored(top_k_accuracy)),
    MetricInfo("mse", TaskKind.REGRESSION, False, False, _labels(mean_squared_error)),
    MetricInfo("rmse", TaskKind.REGRESSION, False, False, _labels(root_mean_squared_error)),
    MetricInfo("mae", TaskKind.REGRESSION, False, False, _labels(mean_absolute_error)),
    MetricInfo("r2", TaskKind.REGRESSION, True, False, _labels(r2_score)),
    MetricInfo("mape", TaskKind.REGRESSION, False, False, _labels(mean_absolute_percentage_error)),
    MetricInfo("ari", TaskKind.CLUSTERING, True, False, _labels(adjusted_rand_index)),
    MetricInfo("nmi", TaskKind.CLUSTERING, True, False, _labels(normalized_mutual_info)),
    MetricInfo("fmi", TaskKind.CLUSTERING, True, False, _labels(fowlkes_mallows_index)),
    MetricInfo("purity", TaskKind.CLUSTERING, True, False, _labels(purity)),
]}


def get_metric(name: str) -> MetricInfo:
    if name not in METRICS:
        raise UnknownComponentError("metric", name, list(METRICS))
    return METRICS[name]


def compute_metric(name: str, y_true, y_pred, scores=None, classes=None) -> float:
    info = get_metric(name)
    if info.needs_scores and scores is None:
        raise DataValidationError(f"metric {name} needs class scores")
    return float(info.fn(y_true, y_pred, scores, classes))


def search_score(name: str, y_true, y_pred, scores=None, classes=None) -> float:
    """Metric value oriented for maximization (error metrics negated)."""
    value = compute_metric(name, y_true, y_pred, scores, classes)
    return value if get_metric(name).greater_is_better else -value


def metric_report(task: TaskKind, y_true, y_pred, scores=None, classes=None, log: logging.Logger = logger) -> MetricReport:
    if task == TaskKind.CLASSIFICATION:
        return classification_metrics(y_true, y_pred, scores, classes, log)
    if task == TaskKind.REGRESSION:
        return regression_metrics(y_true, y_pred, log)
    return clustering_metrics(y_true, y_pred)
