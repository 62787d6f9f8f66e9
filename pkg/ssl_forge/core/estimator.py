"""
The estimator contract shared by every algorithm.

An `Estimator` holds validated parameters; `fit` returns an immutable
`FittedModel` wrapping an algorithm-specific `FittedState`. Fitted states
answer `decide(X)` with dense outputs (class indices, real values or cluster
ids) and optional scores; the fitted model maps class indices back to the
original labels.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional, Tuple, Type

import numpy as np

from ssl_forge.core.dataset import (
    Prediction, SSLDataset, TaskKind, argmax_lowest, check_features, validate_dataset,
)
from ssl_forge.core.exceptions import ConfigError, DataValidationError
from ssl_forge.core.params import ComponentParams, NoParams, ParamMap, params_to_dict, parse_params


class FittedState(ABC):
    """Algorithm-specific fitted parameters."""

    @abstractmethod
    def decide(self, X: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Dense outputs for each row of X, plus optional per-class scores."""


class ScoreState(FittedState):
    """Fitted state whose labels are the argmax of its class scores."""

    @abstractmethod
    def class_scores(self, X: np.ndarray) -> np.ndarray:
        """Per-class score matrix."""

    def decide(self, X: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        scores = self.class_scores(X)
        return argmax_lowest(scores), scores


def json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, np.generic):
        return json_safe(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


@dataclass(frozen=True)
class FittedModel:
    """Immutable result of fitting an estimator."""
    name: str
    task: TaskKind
    params: ComponentParams
    n_features: int
    state: FittedState
    classes: Optional[np.ndarray] = None
    probabilistic: bool = False
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def predict(self, X) -> Prediction:
        """Labels for every row of X; scores when the algorithm defines them."""
        X = check_features(X, self.n_features)
        if X.shape[0] == 0:
            return Prediction(labels=np.zeros(0) if self.classes is None else self.classes[:0],
                              scores=None, probabilistic=self.probabilistic)
        outputs, scores = self.state.decide(X)
        labels = self.classes[outputs] if self.classes is not None else outputs
        return Prediction(labels=labels, scores=scores, probabilistic=self.probabilistic and scores is not None)

    def predict_proba(self, X) -> np.ndarray:
        """Per-class probabilities; only for probabilistic estimators."""
        if not self.probabilistic:
            raise ConfigError(f"{self.name} does not produce class probabilities")
        return self.predict(X).scores

    def score(self, X, y) -> float:
        """Accuracy (classification), R^2 (regression) or ARI (clustering)."""
        from ssl_forge.evaluation import metrics

        predicted = self.predict(X).labels
        y = np.asarray(y)
        if self.task == TaskKind.CLASSIFICATION:
            return metrics.accuracy(y, predicted)
        if self.task == TaskKind.REGRESSION:
            return metrics.r2_score(y, predicted)
        return metrics.adjusted_rand_index(y, predicted)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-safe summary of the fitted model."""
        return {
            "name": self.name,
            "task": self.task.value,
            "params": params_to_dict(self.params),
            "n_features": self.n_features,
            "classes": None if self.classes is None else json_safe(self.classes),
            "diagnostics": json_safe(self.diagnostics),
        }


class Estimator(ABC):
    """
    Base class for every algorithm.

    Subclasses declare `name`, `task`, a pydantic `Params` model and
    implement `_fit(dataset, seed, diagnostics)`. The dataset handed to
    `_fit` is validated: classification labels are dense class indices.
    """
    name: ClassVar[str] = "estimator"
    task: ClassVar[TaskKind] = TaskKind.CLASSIFICATION
    Params: ClassVar[Type[ComponentParams]] = NoParams
    probabilistic: ClassVar[bool] = False
    outputs_classes: ClassVar[bool] = True

    def __init__(
        self,
        params: Optional[ParamMap] = None,
        logger: Optional[logging.Logger] = None,
        **kwargs
    ):
        merged = dict(params or {})
        merged.update(kwargs)
        self.params = parse_params(self.Params, merged, self.name)
        self.logger = logger or logging.getLogger(self.__class__.__module__)

    def fit(self, X, y=None, unlabeled_X=None, seed: int = 0) -> FittedModel:
        """Fit on X, y and unlabeled_X, or on an `SSLDataset` passed as X."""
        if isinstance(X, SSLDataset):
            dataset = X
        else:
            if y is None:
                raise DataValidationError("labels y are required")
            dataset = SSLDataset.build(X, y, unlabeled_X)
        return self.fit_dataset(dataset, seed)

    def fit_dataset(self, dataset: SSLDataset, seed: int = 0) -> FittedModel:
        validated = validate_dataset(dataset, self.task)
        self.logger.info(
            f"Fitting {self.name} on {validated.n_labeled} labeled and "
            f"{validated.n_unlabeled} unlabeled rows (seed={seed})"
        )
        diagnostics: Dict[str, Any] = {"warnings": []}
        state = self._fit(validated, int(seed), diagnostics)
        for message in diagnostics["warnings"]:
            self.logger.warning(f"{self.name}: {message}")
        return FittedModel(
            name=self.name,
            task=self.task,
            params=self.params,
            n_features=validated.n_features,
            state=state,
            classes=validated.classes if self.outputs_classes and self.task != TaskKind.REGRESSION else None,
            probabilistic=self.probabilistic,
            diagnostics=diagnostics,
        )

    @abstractmethod
    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> FittedState:
        """Fit on a validated dataset and return the fitted state."""
