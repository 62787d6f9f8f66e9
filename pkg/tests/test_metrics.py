import math

import numpy as np
import pytest

from ssl_forge.core.dataset import TaskKind
from ssl_forge.core.exceptions import DataValidationError, UnknownComponentError
from ssl_forge.evaluation import metrics


Y_TRUE = [0, 0, 1, 1]
Y_PRED = [0, 1, 1, 1]


def test_classification_hand_values():
    report = metrics.classification_metrics(Y_TRUE, Y_PRED)
    assert report.values["accuracy"] == 0.75
    assert report.values["precision_macro"] == pytest.approx((1.0 + 2.0 / 3.0) / 2.0)
    assert report.values["recall_macro"] == pytest.approx(0.75)
    assert report.values["f1_macro"] == pytest.approx((2.0 / 3.0 + 0.8) / 2.0)
    assert report.values["f1_micro"] == report.values["accuracy"]
    assert report.confusion_matrix.tolist() == [[1, 1], [0, 2]]


def test_confusion_matrix_over_label_union():
    matrix, labels = metrics.confusion_matrix(["b", "a"], ["c", "a"])
    assert labels.tolist() == ["a", "b", "c"]
    assert matrix.tolist() == [[1, 0, 0], [0, 0, 1], [0, 0, 0]]


def test_absent_true_class_is_reported():
    report = metrics.classification_metrics([0, 0], [0, 1])
    assert report.values["recall_macro"] == 0.5
    assert any("absent" in w for w in report.warnings)


def test_log_loss_and_top_k():
    scores = np.array([[0.8, 0.2], [0.3, 0.7]])
    assert metrics.log_loss([0, 1], scores) == pytest.approx(-(math.log(0.8) + math.log(0.7)) / 2.0)
    assert metrics.log_loss(["b"], [[1.0, 0.0]], classes=["a", "b"]) == pytest.approx(-math.log(1e-15))
    three = np.array([[0.5, 0.3, 0.2], [0.1, 0.2, 0.7]])
    assert metrics.top_k_accuracy([2, 0], three) == 0.0
    assert metrics.top_k_accuracy([1, 1], three) == 1.0


def test_regression_hand_values():
    report = metrics.regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert report.values["mse"] == pytest.approx(1.0 / 3.0)
    assert report.values["rmse"] == pytest.approx(math.sqrt(1.0 / 3.0))
    assert report.values["mae"] == pytest.approx(1.0 / 3.0)
    assert report.values["r2"] == pytest.approx(0.5)
    assert report.values["mape"] == pytest.approx(1.0 / 9.0)


def test_regression_degenerate_targets():
    assert metrics.r2_score([2.0, 2.0], [2.0, 2.0]) == 1.0
    assert metrics.r2_score([2.0, 2.0], [1.0, 2.0]) == 0.0
    assert math.isnan(metrics.mean_absolute_percentage_error([0.0, 0.0], [1.0, 2.0]))
    with pytest.raises(DataValidationError, match="two samples"):
        metrics.r2_score([1.0], [1.0])


def test_clustering_hand_values():
    truth = [0, 0, 0, 1, 1, 1]
    clusters = [0, 0, 1, 1, 2, 2]
    assert metrics.adjusted_rand_index(truth, clusters) == pytest.approx(0.8 / 3.3)
    assert metrics.purity(truth, clusters) == pytest.approx(5.0 / 6.0)
    assert metrics.fowlkes_mallows_index(truth, clusters) == pytest.approx(2.0 / math.sqrt(18.0))


def test_clustering_invariances():
    truth = [0, 0, 1, 1, 2, 2]
    relabeled = [5, 5, 3, 3, 9, 9]
    assert metrics.adjusted_rand_index(truth, relabeled) == pytest.approx(1.0)
    assert metrics.normalized_mutual_info(truth, relabeled) == pytest.approx(1.0)
    a, b = [0, 0, 1, 1, 1, 2], [1, 0, 0, 2, 2, 2]
    assert metrics.adjusted_rand_index(a, b) == pytest.approx(metrics.adjusted_rand_index(b, a))
    assert metrics.normalized_mutual_info([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0)


def test_metric_input_checks():
    with pytest.raises(DataValidationError, match="equal 1-D shapes"):
        metrics.accuracy([0, 1], [0])
    with pytest.raises(DataValidationError, match="at least one sample"):
        metrics.accuracy([], [])


def test_registry_lookup():
    assert len(metrics.METRICS) == 16
    with pytest.raises(UnknownComponentError, match="unknown metric"):
        metrics.get_metric("auc")
    with pytest.raises(DataValidationError, match="needs class scores"):
        metrics.compute_metric("log_loss", [0, 1], [0, 1])
    assert metrics.search_score("mse", [1.0, 2.0], [1.0, 4.0]) == pytest.approx(-2.0)
    assert metrics.search_score("accuracy", [1, 2], [1, 2]) == 1.0


def test_report_to_dict():
    data = metrics.metric_report(TaskKind.CLASSIFICATION, np.array(Y_TRUE), np.array(Y_PRED)).to_dict()
    assert data["task"] == "classification"
    assert data["labels"] == [0, 1]
    assert isinstance(data["labels"][0], int)
    assert "warnings" not in data
