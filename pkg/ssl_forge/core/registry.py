"""
Algorithm registry and the name-based fit/predict entry points.
"""
import importlib
from typing import Dict, List, Optional, Type

from ssl_forge.core.dataset import Prediction, SSLDataset
from ssl_forge.core.estimator import Estimator, FittedModel
from ssl_forge.core.exceptions import UnknownComponentError
from ssl_forge.core.params import ParamMap


_ESTIMATORS: Dict[str, Type[Estimator]] = {}

_BUILTIN_MODULES = [
    "ssl_forge.algorithms.supervised",
    "ssl_forge.algorithms.graph",
    "ssl_forge.algorithms.generative",
    "ssl_forge.algorithms.margin",
    "ssl_forge.algorithms.disagreement",
    "ssl_forge.algorithms.ensemble",
    "ssl_forge.algorithms.cluster",
    "ssl_forge.algorithms.regression",
    "ssl_forge.neural.trainer",
]

# The sixteen semi-supervised algorithms; the rest of the registry holds supervised baselines.
SSL_ALGORITHMS = [
    "ssgmm", "tsvm", "lapsvm", "label_propagation", "label_spreading",
    "co_training", "tri_training", "semiboost", "assemble", "coreg",
    "constrained_kmeans", "constrained_seed_kmeans",
    "pseudo_label", "pi_model", "mean_teacher", "pi_model_reg",
]


def register(cls: Type[Estimator]) -> Type[Estimator]:
    """Class decorator adding an estimator under its `name`."""
    _ESTIMATORS[cls.name] = cls
    return cls


def _load_builtins() -> None:
    for module in _BUILTIN_MODULES:
        importlib.import_module(module)


def available_estimators() -> List[str]:
    _load_builtins()
    return sorted(_ESTIMATORS)


def get_estimator_class(name: str) -> Type[Estimator]:
    _load_builtins()
    if name not in _ESTIMATORS:
        raise UnknownComponentError("algorithm", name, list(_ESTIMATORS))
    return _ESTIMATORS[name]


def make_estimator(name: str, params: Optional[ParamMap] = None, **kwargs) -> Estimator:
    return get_estimator_class(name)(params, **kwargs)


def estimator_fit(name: str, params: Optional[ParamMap], d: SSLDataset, seed: int = 0) -> FittedModel:
    """Fit the named algorithm with a ParamMap."""
    return make_estimator(name, params).fit_dataset(d, seed)


def estimator_predict(model: FittedModel, X) -> Prediction:
    return model.predict(X)
