"""
Shared fixtures for the ssl_forge test suite.
"""
import numpy as np
import pytest

from ssl_forge.core.dataset import SSLDataset
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled


@pytest.fixture
def moons():
    """Two-moons, 200 points, noise 0.05."""
    return generate("two_moons", {"n": 200, "noise_sd": 0.05}, seed=0)


@pytest.fixture
def moons_split(moons):
    """Ten labeled moons rows; the rest unlabeled."""
    return split_labeled_unlabeled(moons.X, moons.y, n_labeled=10, stratified=True, seed=0)


@pytest.fixture
def blobs():
    """Three well-separated blobs of 30 points each."""
    return generate("blobs", {"n": 90, "k": 3, "sd": 0.5}, seed=0)


@pytest.fixture
def blobs_split(blobs):
    return split_labeled_unlabeled(blobs.X, blobs.y, n_labeled=9, stratified=True, seed=0)


@pytest.fixture
def separable():
    """Two Gaussian clouds around (-3, 0) and (3, 0): 10 labeled, 40 unlabeled rows."""
    stream = np.random.default_rng(7)
    X = np.vstack([stream.normal((-3.0, 0.0), 0.5, size=(25, 2)), stream.normal((3.0, 0.0), 0.5, size=(25, 2))])
    y = np.array([0] * 25 + [1] * 25)
    labeled = np.array([0, 1, 2, 3, 4, 25, 26, 27, 28, 29])
    unlabeled = np.setdiff1d(np.arange(50), labeled)
    return SSLDataset.build(X[labeled], y[labeled], X[unlabeled]), y[unlabeled]
