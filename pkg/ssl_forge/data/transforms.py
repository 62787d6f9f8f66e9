"""
Tabular transforms.

Each transform kind learns statistics from a matrix with `fit` and replays
them on new rows with `apply`. `transform_fit_apply` does both on the fitting
matrix and returns the reusable `TransformerState`.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Type

import numpy as np
from pydantic import Field, model_validator

from ssl_forge.core.dataset import as_feature_matrix, check_features, check_finite
from ssl_forge.core.exceptions import DataValidationError, UnknownComponentError
from ssl_forge.core.params import ComponentParams, NoParams, ParamMap, parse_params
from ssl_forge.core.rng import SeededStream


logger = logging.getLogger(__name__)


class OneHotParams(ComponentParams):
    columns: Optional[List[int]] = Field(None, description="Columns to encode; all columns when omitted")


class GaussianNoiseParams(ComponentParams):
    sigma: float = Field(0.1, ge=0.0, description="Standard deviation of the additive noise")
    seed: int = Field(0, description="Seed of the noise stream")


class ClipParams(ComponentParams):
    low: Optional[float] = Field(None, description="Lower bound; unbounded when omitted")
    high: Optional[float] = Field(None, description="Upper bound; unbounded when omitted")

    @model_validator(mode="after")
    def check_bounds(self) -> "ClipParams":
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ValueError("low must not exceed high")
        return self


class DropConstantParams(ComponentParams):
    tol: float = Field(0.0, ge=0.0, description="Columns with peak-to-peak range <= tol are dropped")


@dataclass(frozen=True)
class TransformerState:
    """A fitted transform: its kind, parameters and learned statistics."""
    kind: str
    params: ComponentParams
    n_features_in: int
    stats: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def apply(self, X) -> np.ndarray:
        """Replay the transform on new rows."""
        X = check_features(X, self.n_features_in)
        return get_transform(self.kind).apply(self.params, self.stats, X)


class Transform(ABC):
    """One transform kind."""
    kind: str = ""
    Params: Type[ComponentParams] = NoParams
    needs_rows: bool = True

    def fit(self, params: ComponentParams, X: np.ndarray, warnings: List[str]) -> Dict[str, Any]:
        return {}

    @abstractmethod
    def apply(self, params: ComponentParams, stats: Dict[str, Any], X: np.ndarray) -> np.ndarray:
        """Transform rows with learned statistics."""

    def fit_apply(self, params: ComponentParams, stats: Dict[str, Any], X: np.ndarray) -> np.ndarray:
        return self.apply(params, stats, X)


class StandardScale(Transform):
    """Zero mean, unit (population) standard deviation per column."""
    kind = "standard_scale"

    def fit(self, params, X, warnings):
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        constant = std == 0.0
        for col in np.flatnonzero(constant):
            warnings.append(f"column {col} has zero variance and is passed through unscaled")
        return {"mean": np.where(constant, 0.0, mean), "std": np.where(constant, 1.0, std)}

    def apply(self, params, stats, X):
        return (X - stats["mean"]) / stats["std"]


class MinMaxScale(Transform):
    """Columns mapped onto [0, 1]; constant columns become 0."""
    kind = "minmax_scale"

    def fit(self, params, X, warnings):
        low = X.min(axis=0)
        span = X.max(axis=0) - low
        return {"min": low, "span": np.where(span == 0.0, 1.0, span), "constant": span == 0.0}

    def apply(self, params, stats, X):
        out = (X - stats["min"]) / stats["span"]
        out[:, stats["constant"]] = 0.0
        return out


class OneHot(Transform):
    """Each encoded column is replaced, in place, by one indicator per observed value."""
    kind = "one_hot"
    Params = OneHotParams

    def fit(self, params, X, warnings):
        columns = list(range(X.shape[1])) if params.columns is None else list(params.columns)
        for col in columns:
            if not 0 <= col < X.shape[1]:
                raise DataValidationError(f"one_hot column {col} out of range for {X.shape[1]} columns")
        return {"categories": {col: np.unique(X[:, col]) for col in columns}}

    def apply(self, params, stats, X):
        categories = stats["categories"]
        blocks = []
        for col in range(X.shape[1]):
            if col not in categories:
                blocks.append(X[:, [col]])
                continue
            values = categories[col]
            block = (X[:, [col]] == values[None, :]).astype(np.float64)
            unseen = int(np.sum(block.sum(axis=1) == 0))
            if unseen:
                logger.warning(f"one_hot: {unseen} rows hold values of column {col} not seen during fit")
            blocks.append(block)
        return np.hstack(blocks) if blocks else X.copy()


class GaussianNoise(Transform):
    """Additive Gaussian noise at fit time; identity on new rows."""
    kind = "gaussian_noise"
    Params = GaussianNoiseParams
    needs_rows = False

    def apply(self, params, stats, X):
        return X.copy()

    def fit_apply(self, params, stats, X):
        if params.sigma == 0.0:
            return X.copy()
        return X + SeededStream(params.seed).gaussian(X.shape, sd=params.sigma)


class Clip(Transform):
    """Values clipped to [low, high]."""
    kind = "clip"
    Params = ClipParams
    needs_rows = False

    def apply(self, params, stats, X):
        low = -np.inf if params.low is None else params.low
        high = np.inf if params.high is None else params.high
        return np.clip(X, low, high)


class L2Normalize(Transform):
    """Rows scaled to unit Euclidean norm; zero rows stay zero."""
    kind = "l2_normalize"
    needs_rows = False

    def apply(self, params, stats, X):
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


class PolynomialDeg2(Transform):
    """Original columns followed by all products x_i * x_j with i <= j."""
    kind = "polynomial_deg2"
    needs_rows = False

    def apply(self, params, stats, X):
        n_features = X.shape[1]
        rows, cols = np.triu_indices(n_features)
        return np.hstack([X, X[:, rows] * X[:, cols]])


class DropConstant(Transform):
    """Columns that are constant on the fitting data are removed."""
    kind = "drop_constant"
    Params = DropConstantParams

    def fit(self, params, X, warnings):
        keep = np.ptp(X, axis=0) > params.tol
        if not np.any(keep):
            raise DataValidationError("drop_constant would remove every column")
        dropped = np.flatnonzero(~keep)
        if dropped.size:
            warnings.append(f"dropped constant columns {dropped.tolist()}")
        return {"keep": keep}

    def apply(self, params, stats, X):
        return X[:, stats["keep"]]


_TRANSFORMS: Dict[str, Transform] = {
    t.kind: t for t in (
        StandardScale(), MinMaxScale(), OneHot(), GaussianNoise(),
        Clip(), L2Normalize(), PolynomialDeg2(), DropConstant(),
    )
}

TRANSFORM_KINDS = sorted(_TRANSFORMS)


def get_transform(kind: str) -> Transform:
    if kind not in _TRANSFORMS:
        raise UnknownComponentError("transformer", kind, list(_TRANSFORMS))
    return _TRANSFORMS[kind]


def transform_fit_apply(kind: str, params: Optional[ParamMap], X_all) -> Tuple[TransformerState, np.ndarray]:
    """Fit a transform on X_all and return its state with the transformed matrix."""
    transform = get_transform(kind)
    parsed = parse_params(transform.Params, params, kind)
    X_all = as_feature_matrix(X_all, "X_all")
    check_finite(X_all, "X_all")
    if transform.needs_rows and X_all.shape[0] == 0:
        raise DataValidationError(f"{kind} needs at least one row to learn its statistics")
    warnings: List[str] = []
    stats = transform.fit(parsed, X_all, warnings)
    for message in warnings:
        logger.warning(f"{kind}: {message}")
    state = TransformerState(kind=kind, params=parsed, n_features_in=X_all.shape[1], stats=stats, warnings=warnings)
    return state, transform.fit_apply(parsed, stats, X_all)
