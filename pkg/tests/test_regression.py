import numpy as np
import pytest

from ssl_forge.algorithms.regression import coreg_delta, coreg_fit
from ssl_forge.algorithms.supervised import fit_knn
from ssl_forge.core.dataset import SSLDataset, TaskKind, validate_dataset
from ssl_forge.core.exceptions import DataValidationError
from ssl_forge.core.registry import estimator_fit
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled


@pytest.fixture
def linear_split():
    data = generate("linear", {"n": 120, "d": 2, "noise_sd": 0.0}, seed=3)
    return split_labeled_unlabeled(data.X, data.y, n_labeled=20, stratified=False, seed=3)


def test_delta_hand_example():
    X_l = np.array([[0.0], [1.0], [2.0], [3.0]])
    y_hat, delta = coreg_delta(X_l, np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.4]), k=2, p=2.0)
    assert y_hat == pytest.approx(0.5)
    assert delta == pytest.approx(0.375)


def test_zero_rounds_averages_supervised_regressors(linear_split):
    d = validate_dataset(linear_split.dataset, TaskKind.REGRESSION)
    state, info = coreg_fit(d, rounds=0)
    assert info["n_added"] == 0
    first = fit_knn(d.X, d.y, 3, 2.0, False, regression=True)
    second = fit_knn(d.X, d.y, 3, 5.0, False, regression=True)
    X = d.unlabeled_X
    assert np.allclose(state.predict(X), (first.predict(X) + second.predict(X)) / 2.0)


def test_added_rows_are_distinct_and_confident(linear_split):
    d = validate_dataset(linear_split.dataset, TaskKind.REGRESSION)
    _, info = coreg_fit(d, rounds=15, pool=30, seed=1)
    indices = [a["index"] for a in info["added"]]
    assert len(indices) == len(set(indices)) == info["n_added"]
    assert all(a["delta"] > 0 for a in info["added"])
    assert info["n_added"] <= 2 * info["rounds"]


def test_coreg_fits_noiseless_linear_data(linear_split):
    model = estimator_fit("coreg", {"rounds": 20, "pool": 40}, linear_split.dataset, seed=0)
    assert model.score(linear_split.dataset.unlabeled_X, linear_split.unlabeled_y) > 0.5
    assert model.predict(linear_split.dataset.unlabeled_X).labels.dtype == np.float64


def test_coreg_needs_enough_labeled_rows():
    d = validate_dataset(SSLDataset.build([[0.0], [1.0], [2.0]], [0.0, 1.0, 2.0], [[1.5]]), TaskKind.REGRESSION)
    with pytest.raises(DataValidationError, match="at least 4 labeled rows"):
        coreg_fit(d)


def test_coreg_beats_supervised_knn_on_noiseless_linear_data():
    coreg, knn = [], []
    for seed in range(5):
        data = generate("linear", {"n": 200, "d": 3, "noise_sd": 0.0}, seed=seed)
        split = split_labeled_unlabeled(data.X, data.y, n_labeled=10, stratified=False, seed=seed)
        X, y = split.dataset.unlabeled_X, split.unlabeled_y
        for name, errors in (("coreg", coreg), ("knn_regressor", knn)):
            predicted = estimator_fit(name, None, split.dataset, seed=seed).predict(X).labels
            errors.append(float(np.mean((predicted - y) ** 2)))
    assert np.median(coreg) <= np.median(knn)
