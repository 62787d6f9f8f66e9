"""
Every semi-supervised algorithm fitted and applied through the registry.
"""
import numpy as np
import pytest

from ssl_forge.core.dataset import TaskKind
from ssl_forge.core.registry import available_estimators, estimator_fit, estimator_predict, get_estimator_class
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled


SMALL_NET = {"hidden": [8], "epochs": 5}

SSL_ALGORITHMS = {
    "ssgmm": {},
    "tsvm": {},
    "lapsvm": {"iters": 100},
    "label_propagation": {},
    "label_spreading": {"alpha": 0.9},
    "co_training": {"rounds": 5},
    "tri_training": {},
    "assemble": {"T": 5},
    "semiboost": {"T": 5},
    "constrained_kmeans": {"constraints_from_labels": True, "restarts": 3},
    "constrained_seed_kmeans": {},
    "coreg": {"rounds": 5, "pool": 20},
    "pseudo_label": SMALL_NET,
    "pi_model": SMALL_NET,
    "mean_teacher": SMALL_NET,
    "pi_model_reg": SMALL_NET,
}


@pytest.fixture(scope="module")
def splits():
    moons = generate("two_moons", {"n": 120, "noise_sd": 0.05}, seed=0)
    linear = generate("linear", {"n": 80, "d": 2}, seed=0)
    return {
        "class": split_labeled_unlabeled(moons.X, moons.y, n_labeled=10, seed=0),
        "real": split_labeled_unlabeled(linear.X, linear.y, n_labeled=15, stratified=False, seed=0),
    }


def test_registry_lists_every_algorithm():
    assert set(SSL_ALGORITHMS) <= set(available_estimators())
    assert len(SSL_ALGORITHMS) == 16


@pytest.mark.parametrize("name", sorted(SSL_ALGORITHMS))
def test_fit_and_predict(splits, name):
    task = get_estimator_class(name).task
    split = splits["real" if task == TaskKind.REGRESSION else "class"]
    d = split.dataset
    model = estimator_fit(name, SSL_ALGORITHMS[name], d, seed=0)
    prediction = estimator_predict(model, d.unlabeled_X)
    assert len(prediction) == d.n_unlabeled
    if task == TaskKind.REGRESSION:
        assert np.all(np.isfinite(prediction.labels))
    elif task == TaskKind.CLASSIFICATION:
        assert set(np.unique(prediction.labels)) <= {0, 1}
        if model.probabilistic:
            assert np.allclose(prediction.scores.sum(axis=1), 1.0)
    else:
        assert prediction.labels.min() >= 0
    again = estimator_predict(estimator_fit(name, SSL_ALGORITHMS[name], d, seed=0), d.unlabeled_X)
    assert np.array_equal(prediction.labels, again.labels)
    assert estimator_predict(model, d.unlabeled_X[:0]).labels.shape == (0,)
