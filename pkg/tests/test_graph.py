import numpy as np
import pytest

from ssl_forge.algorithms.graph import (
    build_knn_graph, label_propagation_fit, label_spreading_fit, normalized_affinity, scale_aware_gamma,
)
from ssl_forge.core.dataset import SSLDataset
from ssl_forge.core.exceptions import InvalidParameterError
from ssl_forge.core.registry import estimator_fit
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled
from ssl_forge.evaluation.metrics import accuracy


def test_graph_is_symmetric_with_zero_diagonal():
    X = np.random.default_rng(0).normal(size=(30, 2))
    W = build_knn_graph(X, k=4).to_dense()
    assert np.array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    assert np.all((W > 0).sum(axis=1) >= 4)


def test_connectivity_weights_are_one():
    X = np.arange(6.0).reshape(-1, 1)
    W = build_knn_graph(X, k=1, mode="connectivity").to_dense()
    assert set(np.unique(W)) <= {0.0, 1.0}
    # node 1 is equidistant from 0 and 2 and links to 0
    assert W[0, 1] == 1.0 and W[1, 2] == 1.0


def test_graph_k_range():
    with pytest.raises(InvalidParameterError, match="1 <= k < n"):
        build_knn_graph(np.zeros((3, 1)), k=3)


def test_scale_aware_gamma_constant_data():
    assert scale_aware_gamma(np.ones((4, 2))) == 1.0
    assert scale_aware_gamma(np.array([[0.0], [2.0]])) == 1.0


@pytest.mark.parametrize("seed", range(20))
def test_spreading_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 51))
    X = rng.normal(size=(n, 3))
    y = np.array([0, 1, 2, 0, 1])
    g = build_knn_graph(X, k=5, n_labeled=len(y))
    alpha = 0.9
    result = label_spreading_fit(g, y, 3, alpha=alpha, tol=1e-12, max_iter=5000)
    Y = np.zeros((n, 3))
    Y[np.arange(len(y)), y] = 1.0
    S = normalized_affinity(g).toarray()
    closed = (1 - alpha) * np.linalg.solve(np.eye(n) - alpha * S, Y)
    assert result.converged
    assert np.max(np.abs(result.F - closed)) < 1e-6


def test_propagation_clamps_labeled_rows():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    g = build_knn_graph(X, k=2, mode="connectivity", n_labeled=2)
    result = label_propagation_fit(g, np.array([0, 1]), 2)
    assert result.F[0].tolist() == [1.0, 0.0]
    assert result.F[1].tolist() == [0.0, 1.0]
    assert np.all(np.isfinite(result.F))


def test_propagation_on_chain():
    # harmonic solution of the k=2 graph: 0.25, 0.5, 0.75
    X = np.array([[0.0], [4.0], [1.0], [2.0], [3.0]])
    g = build_knn_graph(X, k=2, mode="connectivity", n_labeled=2)
    result = label_propagation_fit(g, np.array([0, 1]), 2, tol=1e-12, max_iter=10000)
    assert np.allclose(result.F[2:, 1], [0.25, 0.5, 0.75], atol=1e-8)


def test_label_spreading_two_moons_two_labels():
    data = generate("two_moons", {"n": 200, "noise_sd": 0.05}, seed=0)
    scores = []
    for seed in range(5):
        split = split_labeled_unlabeled(data.X, data.y, n_labeled=2, stratified=True, seed=seed)
        model = estimator_fit("label_spreading", {"alpha": 0.99}, split.dataset, seed=seed)
        predicted = model.diagnostics["transductive_labels"]
        scores.append(accuracy(split.unlabeled_y, predicted))
    assert np.median(scores) >= 0.95


def test_graph_estimator_diagnostics(moons_split):
    model = estimator_fit("label_propagation", {"k": 5}, moons_split.dataset)
    assert set(["n_iter", "converged", "final_delta", "transductive_labels"]) <= set(model.diagnostics)
    assert len(model.diagnostics["transductive_labels"]) == moons_split.dataset.n_unlabeled
    proba = model.predict_proba(moons_split.dataset.unlabeled_X)
    assert np.allclose(proba.sum(axis=1), 1.0)


@pytest.mark.parametrize("name", ["label_propagation", "label_spreading", "ssgmm", "tsvm", "lapsvm",
                                  "constrained_seed_kmeans"])
def test_transductive_labels_use_original_labels(moons_split, name):
    names = np.array(["lower", "upper"])
    dataset = SSLDataset.build(moons_split.dataset.X, names[moons_split.dataset.y], moons_split.dataset.unlabeled_X)
    model = estimator_fit(name, None, dataset, seed=0)
    labels = model.diagnostics["transductive_labels"]
    assert set(labels.tolist()) <= {"lower", "upper"}
    assert len(labels) == dataset.n_unlabeled
