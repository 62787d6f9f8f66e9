"""
Dense ReLU network with hand-written backpropagation.

Hidden layers use ReLU, the output layer is linear; softmax is applied by
the losses and by prediction. Input noise is passed in explicitly so a
forward pass is a pure function of (parameters, input, noise).
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ssl_forge.core.exceptions import DataValidationError, InvalidParameterError
from ssl_forge.core.rng import SeededStream


LOSS_KINDS = ("softmax_cross_entropy", "mse", "consistency_mse")


@dataclass
class ForwardCache:
    """Per-layer inputs and pre-activations of one pass."""
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    output: Optional[np.ndarray] = None


@dataclass
class MlpNetwork:
    """Layer sizes [d, h1, ..., K] with one (weight, bias) pair per layer."""
    layer_sizes: Tuple[int, ...]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @classmethod
    def initialize(cls, layer_sizes: Sequence[int], stream: SeededStream) -> "MlpNetwork":
        """Glorot-uniform weights, zero biases."""
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise InvalidParameterError(f"layer sizes must hold at least two positive entries, got {list(sizes)}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(stream.uniform((fan_in, fan_out), -limit, limit))
            biases.append(np.zeros(fan_out))
        return cls(layer_sizes=sizes, weights=weights, biases=biases)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> List[np.ndarray]:
        """[W0, b0, W1, b1, ...]"""
        params = []
        for W, b in zip(self.weights, self.biases):
            params.extend([W, b])
        return params

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        self.weights = [np.asarray(p, dtype=np.float64) for p in params[0::2]]
        self.biases = [np.asarray(p, dtype=np.float64) for p in params[1::2]]

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(self.layer_sizes, [W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def forward(self, X: np.ndarray, noise: Optional[np.ndarray] = None) -> ForwardCache:
        if X.ndim != 2 or X.shape[1] != self.n_inputs:
            raise DataValidationError(f"network expects {self.n_inputs} input columns, got shape {X.shape}")
        h = X if noise is None else X + noise
        cache = ForwardCache()
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            cache.inputs.append(h)
            z = h @ W + b
            cache.pre_activations.append(z)
            h = z if i == last else np.maximum(z, 0.0)
        cache.output = h
        return cache

    def outputs(self, X: np.ndarray) -> np.ndarray:
        """Noise-free raw outputs (logits for classifiers)."""
        return self.forward(X).output

    def backward(self, cache: ForwardCache, d_output: np.ndarray) -> List[np.ndarray]:
        """Parameter gradients given dL/d(output); ordered like `parameters()`."""
        grads: List[np.ndarray] = [None] * (2 * len(self.weights))
        delta = d_output
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = cache.inputs[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (cache.pre_activations[i - 1] > 0)
        return grads


def mlp_forward(
    net: MlpNetwork,
    X: np.ndarray,
    train_mode: bool = False,
    noise_sd: float = 0.0,
    stream: Optional[SeededStream] = None
) -> ForwardCache:
    """Forward pass; train mode adds Gaussian input noise drawn from `stream`."""
    noise = None
    if train_mode and noise_sd > 0:
        if stream is None:
            raise InvalidParameterError("train-mode noise needs a random stream")
        noise = stream.gaussian(X.shape, sd=noise_sd)
    return net.forward(X, noise)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy against class indices or probability rows; returns (loss, dL/dlogits)."""
    n = logits.shape[0]
    if targets.ndim == 1:
        onehot = np.zeros_like(logits)
        onehot[np.arange(n), targets.astype(np.int64)] = 1.0
        targets = onehot
    log_p = logits - logsumexp(logits, axis=1, keepdims=True)
    loss = -float(np.sum(targets * log_p)) / n
    return loss, (np.exp(log_p) - targets) / n


def mse(outputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean over samples and outputs."""
    targets = targets.reshape(outputs.shape)
    diff = outputs - targets
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def _softmax_backward(probs: np.ndarray, d_probs: np.ndarray) -> np.ndarray:
    return probs * (d_probs - np.sum(d_probs * probs, axis=1, keepdims=True))


def consistency_mse(out_a: np.ndarray, out_b: np.ndarray, use_softmax: bool = True) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Mean squared difference of two passes (softmax outputs, or raw outputs
    when `use_softmax` is false); gradients flow into both passes.
    """
    a = softmax(out_a, axis=1) if use_softmax else out_a
    b = softmax(out_b, axis=1) if use_softmax else out_b
    diff = a - b
    loss = float(np.mean(diff ** 2))
    g = 2.0 * diff / diff.size
    if use_softmax:
        return loss, _softmax_backward(a, g), _softmax_backward(b, -g)
    return loss, g, -g


def mlp_backward(
    net: MlpNetwork,
    X: np.ndarray,
    targets: Optional[np.ndarray] = None,
    loss_kind: str = "softmax_cross_entropy",
    noise: Optional[np.ndarray] = None,
    noise_b: Optional[np.ndarray] = None
) -> Tuple[float, List[np.ndarray]]:
    """
    Loss and exact parameter gradients.

    consistency_mse compares two passes over X perturbed by `noise` and
    `noise_b` (softmax outputs) and needs no targets.
    """
    if loss_kind not in LOSS_KINDS:
        raise InvalidParameterError(f"unknown loss kind {loss_kind!r}")
    cache = net.forward(X, noise)
    if loss_kind == "softmax_cross_entropy":
        loss, d_out = softmax_cross_entropy(cache.output, targets)
        return loss, net.backward(cache, d_out)
    if loss_kind == "mse":
        loss, d_out = mse(cache.output, targets)
        return loss, net.backward(cache, d_out)
    cache_b = net.forward(X, noise_b)
    loss, d_a, d_b = consistency_mse(cache.output, cache_b.output)
    return loss, add_gradients(net.backward(cache, d_a), net.backward(cache_b, d_b))


def add_gradients(first: List[np.ndarray], second: List[np.ndarray], scale: float = 1.0) -> List[np.ndarray]:
    return [g + scale * h for g, h in zip(first, second)]
