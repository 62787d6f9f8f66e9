import numpy as np
import pytest

from ssl_forge.core.dataset import TaskKind
from ssl_forge.core.exceptions import InvalidParameterError, UnknownComponentError
from ssl_forge.data.generators import blob_centers, generate


def test_noise_free_moons_geometry():
    data = generate("two_moons", {"n": 11, "noise_sd": 0.0})
    assert data.X.shape == (11, 2)
    assert np.bincount(data.y).tolist() == [5, 6]
    assert np.allclose(data.X[0], [1.0, 0.0])
    assert np.allclose(data.X[5], [0.0, 0.5])
    assert np.allclose(np.hypot(data.X[:5, 0], data.X[:5, 1]), 1.0)


def test_blobs_cycle_through_clusters():
    data = generate("blobs", {"n": 12, "k": 4, "sd": 0.0})
    assert data.y.tolist() == [0, 1, 2, 3] * 3
    assert np.array_equal(data.X, data.truth["centers"][data.y])
    assert blob_centers(4).tolist() == [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]]


def test_noise_free_linear_targets():
    data = generate("linear", {"n": 30, "d": 4}, seed=2)
    assert data.task == TaskKind.REGRESSION
    assert np.allclose(data.y, data.X @ data.truth["w"])


def test_generators_are_seeded():
    a = generate("two_moons", {"n": 50, "noise_sd": 0.1}, seed=3)
    b = generate("two_moons", {"n": 50, "noise_sd": 0.1}, seed=3)
    c = generate("two_moons", {"n": 50, "noise_sd": 0.1}, seed=4)
    assert np.array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)


def test_generator_errors():
    with pytest.raises(UnknownComponentError, match="unknown generator"):
        generate("spirals")
    with pytest.raises(InvalidParameterError):
        generate("blobs", {"n": 2, "k": 3})
    with pytest.raises(InvalidParameterError):
        generate("linear", {"n": 10, "depth": 2})
