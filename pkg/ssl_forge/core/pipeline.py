"""
Pipeline mechanism: ordered transforms followed by a final estimator.

Transforms are fitted on the labeled and unlabeled rows together, in order,
each step feeding the next; the final estimator is fitted on the transformed
dataset.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ssl_forge.core.dataset import Prediction, SSLDataset, as_feature_matrix
from ssl_forge.core.estimator import FittedModel
from ssl_forge.core.exceptions import ConfigError, DataValidationError, SSLForgeError
from ssl_forge.core.registry import estimator_fit
from ssl_forge.data.transforms import TransformerState, transform_fit_apply


class StepSpec(BaseModel):
    """A named transform step."""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="Unique step name")
    kind: str = Field(..., description="Transformer kind, e.g. standard_scale")
    params: Dict[str, Any] = Field(default_factory=dict, description="Transformer parameters")


class EstimatorSpec(BaseModel):
    """The final estimator of a pipeline."""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="Registered algorithm name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Algorithm parameters")


class PipelineSpec(BaseModel):
    """Ordered transform steps and a final estimator."""
    model_config = ConfigDict(extra="forbid")

    steps: List[StepSpec] = Field(default_factory=list, description="Transform steps in order")
    final: EstimatorSpec = Field(..., description="Final estimator")

    @model_validator(mode="after")
    def check_unique_names(self) -> "PipelineSpec":
        names = [step.name for step in self.steps]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate step names: {duplicates}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PipelineSpec":
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigError(f"invalid pipeline: {e}") from e


def _tag_step(error: SSLForgeError, step: str) -> SSLForgeError:
    error.args = (f"step '{step}': {error}",) + tuple(error.args[1:])
    return error


@dataclass(frozen=True)
class FittedPipeline:
    """Fitted transform states plus the fitted final estimator."""
    steps: Tuple[Tuple[str, TransformerState], ...]
    model: FittedModel

    def transform(self, X) -> np.ndarray:
        X = as_feature_matrix(X, "X")
        for name, state in self.steps:
            try:
                X = state.apply(X)
            except SSLForgeError as e:
                raise _tag_step(e, name)
        return X

    def predict(self, X) -> Prediction:
        return self.model.predict(self.transform(X))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": [{"name": name, "kind": state.kind, "warnings": list(state.warnings)} for name, state in self.steps],
            "model": self.model.to_dict(),
        }


def pipeline_fit(
    spec: PipelineSpec,
    d: SSLDataset,
    seed: int = 0,
    logger: Optional[logging.Logger] = None
) -> FittedPipeline:
    """Fit every transform on X and unlabeled_X jointly, then the final estimator."""
    logger = logger or logging.getLogger(__name__)
    X = as_feature_matrix(d.X, "X")
    unlabeled_X = as_feature_matrix(d.unlabeled_X, "unlabeled_X", n_features=X.shape[1])
    n_labeled = X.shape[0]
    if unlabeled_X.shape[1] != X.shape[1]:
        raise DataValidationError(
            f"feature-dimension mismatch: X has {X.shape[1]} columns, unlabeled_X has {unlabeled_X.shape[1]}"
        )
    X_all = np.vstack([X, unlabeled_X])
    fitted: List[Tuple[str, TransformerState]] = []
    for step in spec.steps:
        logger.info(f"Fitting pipeline step '{step.name}' ({step.kind})")
        try:
            state, X_all = transform_fit_apply(step.kind, step.params, X_all)
        except SSLForgeError as e:
            raise _tag_step(e, step.name)
        fitted.append((step.name, state))
    if fitted:
        d = SSLDataset(X=X_all[:n_labeled], y=d.y, unlabeled_X=X_all[n_labeled:], classes=d.classes)
    model = estimator_fit(spec.final.name, spec.final.params, d, seed)
    return FittedPipeline(steps=tuple(fitted), model=model)
