"""
Supervised base learners.

These learners are used standalone (registered as estimators) and as base
learners inside the disagreement and ensemble meta-algorithms. Learners work
on dense class indices 0..K-1; `fit` returns an immutable fitted learner.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from ssl_forge.core.dataset import SSLDataset, TaskKind, argmax_lowest
from ssl_forge.core.estimator import Estimator, FittedState, ScoreState
from ssl_forge.core.exceptions import ConfigError, InvalidParameterError
from ssl_forge.core.params import ComponentParams, NoParams, parse_params
from ssl_forge.core.registry import register


VAR_FLOOR = 1e-9


def minkowski_neighbors(query: np.ndarray, train: np.ndarray, k: int, p: float):
    """Indices and distances of the k nearest training rows; exact ties go to the lower index."""
    distances = cdist(query, train, metric="minkowski", p=p)
    order = np.argsort(distances, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(distances, order, axis=1)


def neighbor_weights(distances: np.ndarray, weighted: bool) -> np.ndarray:
    """Uniform weights, or inverse-distance weights where an exact match takes all the weight."""
    if not weighted:
        return np.ones_like(distances)
    exact = distances == 0.0
    with np.errstate(divide="ignore"):
        inverse = 1.0 / distances
    return np.where(exact.any(axis=1, keepdims=True), exact.astype(np.float64), inverse)


# ---------------------------------------------------------------------------
# Fitted learners
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FittedKnnClassifier(ScoreState):
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    k: int
    p: float
    weighted: bool

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        order, distances = minkowski_neighbors(X, self.X, self.k, self.p)
        weights = neighbor_weights(distances, self.weighted)
        votes = np.zeros((X.shape[0], self.n_classes))
        rows = np.repeat(np.arange(X.shape[0]), self.k)
        np.add.at(votes, (rows, self.y[order].ravel()), weights.ravel())
        return votes / votes.sum(axis=1, keepdims=True)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.class_scores(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return argmax_lowest(self.class_scores(X))


@dataclass(frozen=True)
class FittedKnnRegressor(FittedState):
    X: np.ndarray
    y: np.ndarray
    k: int
    p: float
    weighted: bool = False

    def predict(self, X: np.ndarray) -> np.ndarray:
        order, distances = minkowski_neighbors(X, self.X, self.k, self.p)
        weights = neighbor_weights(distances, self.weighted)
        return (weights * self.y[order]).sum(axis=1) / weights.sum(axis=1)

    def decide(self, X):
        return self.predict(X), None


@dataclass(frozen=True)
class FittedGaussianNB(ScoreState):
    log_prior: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.variances), axis=1)
        sq = ((X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]).sum(axis=2)
        return self.log_prior[None, :] + log_norm[None, :] - 0.5 * sq

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.class_scores(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return argmax_lowest(self.class_scores(X))


@dataclass(frozen=True)
class FittedLogisticRegression(ScoreState):
    W: np.ndarray
    b: np.ndarray
    loss_history: tuple

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        Z = X @ self.W + self.b
        return np.exp(Z - logsumexp(Z, axis=1, keepdims=True))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.class_scores(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return argmax_lowest(self.class_scores(X))


@dataclass(frozen=True)
class FittedStump(ScoreState):
    feature: int
    threshold: float
    left_class: int
    right_class: int
    n_classes: int
    weighted_error: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        goes_left = X[:, self.feature] <= self.threshold
        return np.where(goes_left, self.left_class, self.right_class).astype(np.int64)

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        scores = np.zeros((X.shape[0], self.n_classes))
        scores[np.arange(X.shape[0]), self.predict(X)] = 1.0
        return scores


# ---------------------------------------------------------------------------
# Learner algorithms
# ---------------------------------------------------------------------------


def _normalized_weights(n: int, sample_weight: Optional[np.ndarray]) -> np.ndarray:
    if sample_weight is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(sample_weight, dtype=np.float64)
    if np.any(w < 0) or w.sum() <= 0:
        raise InvalidParameterError("sample weights must be nonnegative with a positive sum")
    return w / w.sum()


def fit_knn(X, y, k: int, p: float, weighted: bool, n_classes: Optional[int] = None, regression: bool = False):
    """Store the training set; k must not exceed its size."""
    if k > X.shape[0]:
        raise InvalidParameterError(f"k > n: k={k} exceeds the {X.shape[0]} training rows")
    X = np.array(X, dtype=np.float64)
    if regression:
        return FittedKnnRegressor(X=X, y=np.array(y, dtype=np.float64), k=k, p=p, weighted=weighted)
    return FittedKnnClassifier(X=X, y=np.array(y, dtype=np.int64), n_classes=n_classes, k=k, p=p, weighted=weighted)


def fit_gaussian_nb(X, y, n_classes: int, sample_weight=None) -> FittedGaussianNB:
    """Per-class diagonal Gaussians with variances floored at 1e-9."""
    w = _normalized_weights(X.shape[0], sample_weight)
    d = X.shape[1]
    mass = np.bincount(y, weights=w, minlength=n_classes)
    means = np.zeros((n_classes, d))
    variances = np.ones((n_classes, d))
    for c in range(n_classes):
        if mass[c] <= 0:
            continue
        wc = w[y == c] / mass[c]
        Xc = X[y == c]
        means[c] = wc @ Xc
        variances[c] = np.maximum(wc @ (Xc - means[c]) ** 2, VAR_FLOOR)
    with np.errstate(divide="ignore"):
        log_prior = np.log(mass)
    return FittedGaussianNB(log_prior=log_prior, means=means, variances=variances)


def _logistic_loss_grad(W, b, X, Y, w, l2):
    Z = X @ W + b
    log_p = Z - logsumexp(Z, axis=1, keepdims=True)
    loss = -np.sum(w * np.sum(Y * log_p, axis=1)) + 0.5 * l2 * np.sum(W * W)
    G = (np.exp(log_p) - Y) * w[:, None]
    return loss, X.T @ G + l2 * W, G.sum(axis=0)


def fit_logistic_regression(X, y, n_classes: int, lr: float, epochs: int, l2: float,
                            sample_weight=None, max_halvings: int = 50) -> FittedLogisticRegression:
    """
    Full-batch gradient descent on weighted softmax cross-entropy + (l2/2)||W||^2.

    A step that would increase the loss is halved until it does not; when no
    halving helps the descent stops. Weights start at zero.
    """
    w = _normalized_weights(X.shape[0], sample_weight)
    Y = np.zeros((X.shape[0], n_classes))
    Y[np.arange(X.shape[0]), y] = 1.0
    W = np.zeros((X.shape[1], n_classes))
    b = np.zeros(n_classes)
    loss, gW, gb = _logistic_loss_grad(W, b, X, Y, w, l2)
    history = [loss]
    for _ in range(epochs):
        step = lr
        for _ in range(max_halvings):
            W_new, b_new = W - step * gW, b - step * gb
            new_loss, new_gW, new_gb = _logistic_loss_grad(W_new, b_new, X, Y, w, l2)
            if new_loss <= loss:
                break
            step *= 0.5
        else:
            break
        W, b, loss, gW, gb = W_new, b_new, new_loss, new_gW, new_gb
        history.append(loss)
    return FittedLogisticRegression(W=W, b=b, loss_history=tuple(history))


def fit_decision_stump(X, y, n_classes: int, sample_weight=None, tie_tol: float = 1e-12) -> FittedStump:
    """
    Exhaustive weighted 0/1-error search over features and midpoint thresholds.

    Each side of a split predicts its heaviest class, which covers both
    polarities. The constant stump is the starting candidate; a split only
    replaces the incumbent when strictly better, so ties keep the lowest
    feature index and then the lowest threshold.
    """
    w = _normalized_weights(X.shape[0], sample_weight)
    class_mass = np.bincount(y, weights=w, minlength=n_classes)
    majority = int(np.argmax(class_mass))
    best = FittedStump(feature=0, threshold=-np.inf, left_class=majority, right_class=majority,
                       n_classes=n_classes, weighted_error=float(1.0 - class_mass[majority]))
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        boundaries = np.flatnonzero(xs[1:] > xs[:-1])
        if boundaries.size == 0:
            continue
        mass = np.zeros((X.shape[0], n_classes))
        mass[np.arange(X.shape[0]), y[order]] = w[order]
        left = np.cumsum(mass, axis=0)[boundaries]
        right = class_mass[None, :] - left
        errors = 1.0 - left.max(axis=1) - right.max(axis=1)
        j = int(np.argmin(errors))
        if errors[j] < best.weighted_error - tie_tol:
            i = boundaries[j]
            best = FittedStump(
                feature=f,
                threshold=float((xs[i] + xs[i + 1]) / 2.0),
                left_class=int(np.argmax(left[j])),
                right_class=int(np.argmax(right[j])),
                n_classes=n_classes,
                weighted_error=float(max(errors[j], 0.0)),
            )
    return best


# ---------------------------------------------------------------------------
# Parameters and base-learner specs
# ---------------------------------------------------------------------------


class KnnParams(ComponentParams):
    k: int = Field(5, ge=1, description="Number of neighbors")
    minkowski_p: float = Field(2.0, ge=1.0, description="Minkowski order of the distance")
    weighted: bool = Field(False, description="Inverse-distance weighting of the neighbors")


class LogisticParams(ComponentParams):
    lr: float = Field(0.5, gt=0.0, description="Initial step size of each epoch")
    epochs: int = Field(300, ge=0, description="Full-batch gradient steps")
    l2: float = Field(1e-3, ge=0.0, description="L2 penalty on the weights (bias unpenalized)")


class BaseLearner(ABC):
    """A supervised learner usable inside meta-algorithms."""
    kind: str = ""
    Params: Type[ComponentParams] = NoParams
    supports_proba: bool = True
    supports_weights: bool = True

    def __init__(self, params: ComponentParams):
        self.params = params

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int, sample_weight=None):
        """Fitted learner with `predict` and, when supported, `predict_proba`."""


class KnnLearner(BaseLearner):
    kind = "knn_classifier"
    Params = KnnParams
    supports_weights = False

    def fit(self, X, y, n_classes, sample_weight=None):
        if sample_weight is not None:
            raise ConfigError("knn_classifier does not accept sample weights")
        k = min(self.params.k, X.shape[0])
        return fit_knn(X, y, k, self.params.minkowski_p, self.params.weighted, n_classes)


class KnnRegressorLearner(BaseLearner):
    kind = "knn_regressor"
    Params = KnnParams
    supports_proba = False
    supports_weights = False

    def fit(self, X, y, n_classes=0, sample_weight=None):
        return fit_knn(X, y, self.params.k, self.params.minkowski_p, self.params.weighted, regression=True)


class GaussianNBLearner(BaseLearner):
    kind = "gaussian_nb"

    def fit(self, X, y, n_classes, sample_weight=None):
        return fit_gaussian_nb(X, y, n_classes, sample_weight)


class LogisticLearner(BaseLearner):
    kind = "logistic_regression"
    Params = LogisticParams

    def fit(self, X, y, n_classes, sample_weight=None):
        p = self.params
        return fit_logistic_regression(X, y, n_classes, p.lr, p.epochs, p.l2, sample_weight)


class StumpLearner(BaseLearner):
    kind = "decision_stump"
    supports_proba = False

    def fit(self, X, y, n_classes, sample_weight=None):
        return fit_decision_stump(X, y, n_classes, sample_weight)


_LEARNERS: Dict[str, Type[BaseLearner]] = {
    cls.kind: cls for cls in (KnnLearner, KnnRegressorLearner, GaussianNBLearner, LogisticLearner, StumpLearner)
}


class BaseLearnerSpec(BaseModel):
    """Kind and parameters of a base learner."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["knn_classifier", "knn_regressor", "gaussian_nb", "logistic_regression", "decision_stump"] = Field(
        "gaussian_nb", description="Base learner kind"
    )
    params: Dict[str, Any] = Field(default_factory=dict, description="Base learner parameters")

    def build(self, need_proba: bool = False, need_weights: bool = False) -> BaseLearner:
        """Instantiate the learner, checking the capabilities the caller needs."""
        cls = _LEARNERS[self.kind]
        if need_proba and not cls.supports_proba:
            raise ConfigError(f"base learner {self.kind} lacks class probabilities")
        if need_weights and not cls.supports_weights:
            raise ConfigError(f"base learner {self.kind} does not accept sample weights")
        return cls(parse_params(cls.Params, self.params, self.kind))


# ---------------------------------------------------------------------------
# Registered estimators
# ---------------------------------------------------------------------------


@register
class KnnClassifier(Estimator):
    """k-nearest-neighbor majority vote on the labeled rows."""
    name = "knn"
    Params = KnnParams
    probabilistic = True

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> FittedState:
        p = self.params
        return fit_knn(dataset.X, dataset.y, p.k, p.minkowski_p, p.weighted, dataset.n_classes)


@register
class KnnRegressor(Estimator):
    """k-nearest-neighbor mean on the labeled rows."""
    name = "knn_regressor"
    task = TaskKind.REGRESSION
    Params = KnnParams

    def _fit(self, dataset, seed, diagnostics):
        p = self.params
        return fit_knn(dataset.X, dataset.y, p.k, p.minkowski_p, p.weighted, regression=True)


@register
class GaussianNB(Estimator):
    name = "gaussian_nb"
    probabilistic = True

    def _fit(self, dataset, seed, diagnostics):
        return fit_gaussian_nb(dataset.X, dataset.y, dataset.n_classes)


@register
class LogisticRegression(Estimator):
    name = "logistic_regression"
    Params = LogisticParams
    probabilistic = True

    def _fit(self, dataset, seed, diagnostics):
        p = self.params
        fitted = fit_logistic_regression(dataset.X, dataset.y, dataset.n_classes, p.lr, p.epochs, p.l2)
        diagnostics["final_loss"] = fitted.loss_history[-1]
        diagnostics["n_iter"] = len(fitted.loss_history) - 1
        return fitted


@register
class DecisionStump(Estimator):
    name = "decision_stump"

    def _fit(self, dataset, seed, diagnostics):
        fitted = fit_decision_stump(dataset.X, dataset.y, dataset.n_classes)
        diagnostics["weighted_error"] = fitted.weighted_error
        return fitted
