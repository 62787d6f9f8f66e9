"""
Synthetic dataset generators.

Every generator is a pure function of its parameters and seed; all draws
come from `SeededStream`.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple, Type

import numpy as np
from pydantic import Field, model_validator

from ssl_forge.core.dataset import TaskKind
from ssl_forge.core.exceptions import UnknownComponentError
from ssl_forge.core.params import ComponentParams, ParamMap, parse_params
from ssl_forge.core.rng import SeededStream


@dataclass(frozen=True)
class SyntheticData:
    """Generated features, targets and generator ground truth."""
    X: np.ndarray
    y: np.ndarray
    task: TaskKind
    truth: Dict[str, Any] = field(default_factory=dict)


def gen_two_moons(n: int, noise_sd: float = 0.0, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two interleaving unit half-circles.

    Moon 0 holds (cos t, sin t) and moon 1 holds (1 - cos t, 0.5 - sin t)
    with t evenly spaced on [0, pi]; moon 0 gets n // 2 points.
    """
    n0 = n // 2
    n1 = n - n0
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    X = np.vstack([
        np.column_stack([np.cos(t0), np.sin(t0)]),
        np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)]),
    ])
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    if noise_sd > 0:
        X = X + SeededStream(seed).gaussian(X.shape, sd=noise_sd)
    return X, y


def blob_centers(k: int, n_features: int = 2, spacing: float = 10.0) -> np.ndarray:
    """Centers on a square lattice in the first two coordinates."""
    side = max(1, math.ceil(math.sqrt(k)))
    centers = np.zeros((k, n_features))
    for c in range(k):
        centers[c, 0] = spacing * (c % side)
        if n_features > 1:
            centers[c, 1] = spacing * (c // side)
    return centers


def gen_blobs(n: int, k: int, sd: float = 1.0, seed: int = 0, n_features: int = 2) -> SyntheticData:
    """k Gaussian clusters on a lattice with spacing 10; point i belongs to cluster i mod k."""
    centers = blob_centers(k, n_features)
    y = np.arange(n, dtype=np.int64) % k
    X = centers[y].copy()
    if sd > 0:
        X = X + SeededStream(seed).gaussian((n, n_features), sd=sd)
    return SyntheticData(X=X, y=y, task=TaskKind.CLASSIFICATION, truth={"centers": centers})


def gen_linear(n: int, d: int, noise_sd: float = 0.0, seed: int = 0) -> SyntheticData:
    """y = w.x + noise with w and standard-normal X drawn from the seed; w is recorded."""
    stream = SeededStream(seed)
    w = stream.gaussian(d)
    X = stream.gaussian((n, d))
    y = X @ w
    if noise_sd > 0:
        y = y + stream.gaussian(n, sd=noise_sd)
    return SyntheticData(X=X, y=y, task=TaskKind.REGRESSION, truth={"w": w})


class TwoMoonsParams(ComponentParams):
    n: int = Field(200, ge=2, description="Number of points")
    noise_sd: float = Field(0.05, ge=0.0, description="Additive noise standard deviation")


class BlobsParams(ComponentParams):
    n: int = Field(200, ge=1, description="Number of points")
    k: int = Field(3, ge=1, description="Number of clusters")
    sd: float = Field(1.0, ge=0.0, description="Cluster standard deviation")
    n_features: int = Field(2, ge=1, description="Feature count")

    @model_validator(mode="after")
    def check_sizes(self) -> "BlobsParams":
        if self.n < self.k:
            raise ValueError("n must be at least k")
        return self


class LinearParams(ComponentParams):
    n: int = Field(200, ge=1, description="Number of points")
    d: int = Field(3, ge=1, description="Feature count")
    noise_sd: float = Field(0.0, ge=0.0, description="Target noise standard deviation")


def _moons(p: TwoMoonsParams, seed: int) -> SyntheticData:
    X, y = gen_two_moons(p.n, p.noise_sd, seed)
    return SyntheticData(X=X, y=y, task=TaskKind.CLASSIFICATION)


GENERATORS: Dict[str, Tuple[Type[ComponentParams], Callable[[Any, int], SyntheticData]]] = {
    "two_moons": (TwoMoonsParams, _moons),
    "blobs": (BlobsParams, lambda p, seed: gen_blobs(p.n, p.k, p.sd, seed, p.n_features)),
    "linear": (LinearParams, lambda p, seed: gen_linear(p.n, p.d, p.noise_sd, seed)),
}


def generate(kind: str, params: Optional[ParamMap] = None, seed: int = 0) -> SyntheticData:
    """Run a named generator with a ParamMap."""
    if kind not in GENERATORS:
        raise UnknownComponentError("generator", kind, list(GENERATORS))
    model, fn = GENERATORS[kind]
    return fn(parse_params(model, params, kind), int(seed))
