import numpy as np
import pytest

from ssl_forge.core.dataset import (
    SSLDataset, TaskKind, argmax_lowest, as_feature_matrix, check_features, frozen_array,
    normalize_rows, validate_dataset,
)
from ssl_forge.core.exceptions import DataValidationError, DegenerateProblemError


def test_build_without_unlabeled_rows():
    d = SSLDataset.build([[0.0, 1.0], [1.0, 0.0]], [0, 1])
    assert d.n_labeled == 2 and d.n_unlabeled == 0 and d.n_features == 2
    assert d.X_all.shape == (2, 2)


def test_frozen_array_is_read_only():
    array = frozen_array([1, 2, 3])
    with pytest.raises(ValueError):
        array[0] = 5


def test_as_feature_matrix_rejects_vectors():
    with pytest.raises(DataValidationError, match="2-dimensional"):
        as_feature_matrix([1.0, 2.0])


def test_validate_encodes_labels_densely():
    d = SSLDataset.build([[0.0], [1.0], [2.0]], ["b", "a", "b"], [[5.0]])
    v = validate_dataset(d, TaskKind.CLASSIFICATION)
    assert v.classes.tolist() == ["a", "b"]
    assert v.y.tolist() == [1, 0, 1]
    assert v.n_classes == 2


def test_validate_rejects_single_class():
    d = SSLDataset.build([[0.0], [1.0]], [1, 1])
    with pytest.raises(DegenerateProblemError, match="one class"):
        validate_dataset(d, TaskKind.CLASSIFICATION)


def test_single_cluster_labels_allowed_for_clustering():
    d = SSLDataset.build([[0.0], [1.0]], [1, 1])
    assert validate_dataset(d, TaskKind.CLUSTERING).n_classes == 1


def test_validate_feature_mismatch():
    d = SSLDataset(X=np.zeros((2, 2)), y=np.array([0, 1]), unlabeled_X=np.zeros((3, 3)))
    with pytest.raises(DataValidationError, match="feature-dimension mismatch"):
        validate_dataset(d, TaskKind.CLASSIFICATION)


def test_validate_label_count_mismatch():
    d = SSLDataset(X=np.zeros((3, 2)), y=np.array([0, 1]), unlabeled_X=np.zeros((0, 2)))
    with pytest.raises(DataValidationError, match="label count"):
        validate_dataset(d, TaskKind.CLASSIFICATION)


def test_validate_non_finite():
    d = SSLDataset(X=np.array([[0.0], [np.nan]]), y=np.array([0, 1]), unlabeled_X=np.zeros((0, 1)))
    with pytest.raises(DataValidationError, match="non-finite"):
        validate_dataset(d, TaskKind.CLASSIFICATION)


def test_validate_regression_targets():
    d = SSLDataset.build([[0.0], [1.0]], ["1.5", "2"])
    v = validate_dataset(d, TaskKind.REGRESSION)
    assert v.y.dtype == np.float64 and v.y.tolist() == [1.5, 2.0]
    with pytest.raises(DataValidationError, match="not numeric"):
        validate_dataset(SSLDataset.build([[0.0]], ["x"]), TaskKind.REGRESSION)


def test_argmax_ties_go_to_lowest_index():
    scores = np.array([[0.5, 0.5], [0.2, 0.8], [1.0, 1.0]])
    assert argmax_lowest(scores).tolist() == [0, 1, 0]


def test_normalize_rows_uniform_for_zero_rows():
    out = normalize_rows(np.array([[1.0, 3.0], [0.0, 0.0]]))
    assert out.tolist() == [[0.25, 0.75], [0.5, 0.5]]


def test_check_features_width():
    with pytest.raises(DataValidationError, match="fitted on 2 columns"):
        check_features(np.zeros((1, 3)), 2)
    assert check_features(np.zeros((0, 0)), 2).shape == (0, 2)
