import numpy as np
import pytest

from ssl_forge.algorithms.cluster import (
    PairConstraints, constrained_kmeans_fit, constrained_seed_kmeans_fit, update_centroids,
)
from ssl_forge.core.dataset import TaskKind, validate_dataset
from ssl_forge.core.exceptions import DegenerateProblemError, InfeasibleConstraintsError, InvalidParameterError
from ssl_forge.core.registry import estimator_fit
from ssl_forge.evaluation.metrics import adjusted_rand_index


def _non_increasing(trace):
    return all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(trace, trace[1:]))


def test_pairs_from_labels():
    pairs = PairConstraints.from_labels(np.array([0, 0, 1]))
    assert pairs.must_link == ((0, 1),)
    assert pairs.cannot_link == ((0, 2), (1, 2))


def test_must_link_components():
    pairs = PairConstraints.build(must_link=[(0, 1), (1, 2)])
    labels = pairs.components(4)
    assert labels[0] == labels[1] == labels[2] != labels[3]


def test_empty_cluster_is_reseeded_at_farthest_row():
    X = np.array([[0.0], [1.0], [10.0]])
    centroids = update_centroids(X, np.zeros(3, dtype=np.int64), np.array([[0.0], [5.0]]))
    assert centroids[0, 0] == pytest.approx(11.0 / 3.0)
    assert centroids[1, 0] == 10.0


def test_constrained_kmeans_satisfies_pairs(blobs):
    pairs = PairConstraints.build(must_link=[(0, 3), (1, 4)], cannot_link=[(0, 1), (1, 2), (0, 2)])
    result = constrained_kmeans_fit(blobs.X, 3, pairs, seed=0)
    assert pairs.satisfied_by(result.assignments) is None
    assert _non_increasing(result.objective_trace)
    assert adjusted_rand_index(blobs.y, result.assignments) == pytest.approx(1.0)


def test_cannot_link_inside_must_link_component():
    X = np.arange(8, dtype=np.float64).reshape(4, 2)
    pairs = PairConstraints.build(must_link=[(0, 1), (1, 2)], cannot_link=[(0, 2)])
    with pytest.raises(InfeasibleConstraintsError) as info:
        constrained_kmeans_fit(X, 2, pairs)
    assert info.value.pair == (0, 2)


def test_too_few_clusters_for_cannot_link_triangle():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    pairs = PairConstraints.build(cannot_link=[(0, 1), (1, 2), (0, 2)])
    with pytest.raises(InfeasibleConstraintsError, match="restarts"):
        constrained_kmeans_fit(X, 2, pairs, restarts=3)


def test_k_and_pair_ranges():
    X = np.zeros((3, 1))
    with pytest.raises(InvalidParameterError, match="k must satisfy"):
        constrained_kmeans_fit(X, 4)
    with pytest.raises(InvalidParameterError, match="out of range"):
        constrained_kmeans_fit(X, 2, PairConstraints.build(must_link=[(0, 3)]))


def test_constrained_kmeans_estimator_uses_labels(blobs_split):
    d = blobs_split.dataset
    model = estimator_fit("constrained_kmeans", {"constraints_from_labels": True}, d, seed=1)
    assignments = model.diagnostics["assignments"]
    pairs = PairConstraints.from_labels(validate_dataset(d, TaskKind.CLUSTERING).y)
    assert pairs.satisfied_by(assignments) is None
    assert _non_increasing(model.diagnostics["objective_trace"])
    assert model.predict(d.X).labels.shape == (d.n_labeled,)


def test_seed_kmeans_recovers_blobs(blobs_split):
    model = estimator_fit("constrained_seed_kmeans", None, blobs_split.dataset)
    labels = model.predict(blobs_split.dataset.unlabeled_X).labels
    assert np.array_equal(labels, blobs_split.unlabeled_y)
    assert model.diagnostics["converged"]
    assert _non_increasing(model.diagnostics["objective_trace"])


def test_seed_kmeans_clamp_keeps_seeds(blobs_split):
    d = validate_dataset(blobs_split.dataset, TaskKind.CLUSTERING)
    result = constrained_seed_kmeans_fit(d, clamp=True)
    assert np.array_equal(result.assignments[:d.n_labeled], d.y)


def test_seed_kmeans_needs_a_seed_per_cluster(blobs_split):
    d = validate_dataset(blobs_split.dataset, TaskKind.CLUSTERING)
    with pytest.raises(DegenerateProblemError, match="missing class seeds"):
        constrained_seed_kmeans_fit(d, k=4)
