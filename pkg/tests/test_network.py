import numpy as np
import pytest

from ssl_forge.core.exceptions import DataValidationError, InvalidParameterError
from ssl_forge.core.rng import SeededStream
from ssl_forge.neural.network import MlpNetwork, mlp_backward, mlp_forward, softmax_cross_entropy


@pytest.fixture
def network():
    return MlpNetwork.initialize([4, 8, 3], SeededStream(0))


@pytest.fixture
def batch():
    rng = np.random.default_rng(1)
    return rng.normal(size=(6, 4)), np.array([0, 1, 2, 0, 1, 2])


def _check_gradients(net, loss_fn, n_checks=10, eps=1e-6):
    _, grads = loss_fn(net)
    rng = np.random.default_rng(5)
    params = net.parameters()
    for _ in range(n_checks):
        i = int(rng.integers(len(params)))
        idx = tuple(int(rng.integers(s)) for s in params[i].shape)
        shifted = []
        for sign in (1.0, -1.0):
            moved = [p.copy() for p in params]
            moved[i][idx] += sign * eps
            trial = net.copy()
            trial.set_parameters(moved)
            shifted.append(loss_fn(trial)[0])
        numeric = (shifted[0] - shifted[1]) / (2.0 * eps)
        analytic = grads[i][idx]
        assert abs(numeric - analytic) <= 1e-4 * max(abs(numeric) + abs(analytic), 1e-3)


def test_glorot_initialization(network):
    assert [W.shape for W in network.weights] == [(4, 8), (8, 3)]
    assert np.all(np.abs(network.weights[0]) <= np.sqrt(6.0 / 12.0))
    assert all(np.all(b == 0) for b in network.biases)


def test_cross_entropy_gradients(network, batch):
    X, y = batch
    _check_gradients(network, lambda net: mlp_backward(net, X, y))


def test_mse_gradients(batch):
    X, _ = batch
    net = MlpNetwork.initialize([4, 8, 1], SeededStream(2))
    targets = np.linspace(-1.0, 1.0, 6)
    _check_gradients(net, lambda n: mlp_backward(n, X, targets, "mse"))


def test_consistency_gradients(network, batch):
    X, _ = batch
    rng = np.random.default_rng(3)
    noise, noise_b = rng.normal(scale=0.3, size=X.shape), rng.normal(scale=0.3, size=X.shape)
    _check_gradients(network, lambda net: mlp_backward(net, X, loss_kind="consistency_mse", noise=noise, noise_b=noise_b))


def test_consistency_of_identical_passes_is_zero(network, batch):
    X, _ = batch
    loss, grads = mlp_backward(network, X, loss_kind="consistency_mse")
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads)


def test_soft_targets_match_class_indices(network, batch):
    X, y = batch
    logits = network.outputs(X)
    onehot = np.eye(3)[y]
    hard, hard_grad = softmax_cross_entropy(logits, y)
    soft, soft_grad = softmax_cross_entropy(logits, onehot)
    assert hard == pytest.approx(soft)
    assert np.allclose(hard_grad, soft_grad)


def test_forward_errors(network, batch):
    X, y = batch
    with pytest.raises(DataValidationError, match="4 input columns"):
        network.forward(X[:, :3])
    with pytest.raises(InvalidParameterError, match="unknown loss kind"):
        mlp_backward(network, X, y, "hinge")
    with pytest.raises(InvalidParameterError, match="random stream"):
        mlp_forward(network, X, train_mode=True, noise_sd=0.1)
    with pytest.raises(InvalidParameterError, match="layer sizes"):
        MlpNetwork.initialize([4], SeededStream(0))


def test_train_mode_noise_is_seeded(network, batch):
    X, _ = batch
    a = mlp_forward(network, X, True, 0.1, SeededStream(9)).output
    b = mlp_forward(network, X, True, 0.1, SeededStream(9)).output
    assert np.array_equal(a, b)
    assert not np.array_equal(a, mlp_forward(network, X).output)
