"""
K-fold cross-validation with grid and random hyper-parameter search.

Folds split the labeled rows only; every fold fit sees the full unlabeled
matrix. Candidate x fold evaluations run through joblib; results are reduced
in enumeration order so they do not depend on the number of workers.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ssl_forge.core.dataset import SSLDataset, TaskKind
from ssl_forge.core.estimator import FittedModel
from ssl_forge.core.exceptions import AlgorithmError, ConfigError, InvalidParameterError, SSLForgeError
from ssl_forge.core.params import ParamMap
from ssl_forge.core.registry import estimator_fit, get_estimator_class
from ssl_forge.core.rng import SeededStream
from ssl_forge.evaluation.metrics import get_metric, search_score
from ssl_forge.settings import thread_cap


logger = logging.getLogger(__name__)

Fold = Tuple[np.ndarray, np.ndarray]


def kfold_split(
    n: int,
    k: int,
    stratified: bool = False,
    seed: int = 0,
    y: Optional[Sequence] = None,
    log: logging.Logger = logger
) -> List[Fold]:
    """
    k (train, test) index pairs whose test parts partition range(n).

    Rows are shuffled by the seed and dealt to folds round-robin; stratified
    splitting deals class by class, continuing the round-robin across
    classes, so both fold sizes and per-class counts differ by at most one.
    Stratification falls back to a plain split (with a warning) when a class
    has fewer than k rows.
    """
    if not 2 <= k <= n:
        raise InvalidParameterError(f"k-fold needs 2 <= k <= n, got k={k}, n={n} (k > n)" if k > n
                                    else f"k-fold needs 2 <= k <= n, got k={k}")
    stream = SeededStream(seed)
    if stratified:
        if y is None:
            raise InvalidParameterError("stratified folds need labels")
        y = np.asarray(y)
        classes, counts = np.unique(y, return_counts=True)
        if counts.min() < k:
            log.warning(f"stratified {k}-fold infeasible (smallest class has {counts.min()} rows); using unstratified folds")
            stratified = False
        else:
            order = np.concatenate([np.flatnonzero(y == c)[stream.permutation(int(np.sum(y == c)))] for c in classes])
    if not stratified:
        order = stream.permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[order] = np.arange(n) % k
    folds = []
    for f in range(k):
        folds.append((np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)))
    return folds


def grid_candidates(grid: Dict[str, Sequence[Any]]) -> List[ParamMap]:
    """Cartesian product in declaration order; the first key varies slowest."""
    for name, values in grid.items():
        if not isinstance(values, (list, tuple)) or len(values) == 0:
            raise InvalidParameterError(f"grid entry {name!r} needs a nonempty list of values")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


class Distribution(BaseModel):
    """Random-search distribution: uniform(lo, hi), log_uniform(lo, hi) or choice(values)."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["uniform", "log_uniform", "choice"] = Field(..., description="Distribution family")
    low: Optional[float] = Field(None, description="Lower bound")
    high: Optional[float] = Field(None, description="Upper bound")
    values: Optional[List[Any]] = Field(None, description="Candidates of a choice")

    @model_validator(mode="after")
    def check_bounds(self) -> "Distribution":
        if self.kind == "choice":
            if not self.values:
                raise ValueError("choice needs a nonempty values list")
            return self
        if self.low is None or self.high is None or not self.low < self.high:
            raise ValueError("bounds need low < high")
        if self.kind == "log_uniform" and self.low <= 0:
            raise ValueError("log_uniform needs a positive lower bound")
        return self

    def draw(self, stream: SeededStream) -> Any:
        if self.kind == "choice":
            return stream.pick(self.values)
        if self.kind == "uniform":
            return float(stream.uniform(None, self.low, self.high))
        return float(math.exp(stream.uniform(None, math.log(self.low), math.log(self.high))))


def parse_distributions(spec: Dict[str, Union[list, dict]]) -> Dict[str, Distribution]:
    """Lists become choices; dicts are validated as `Distribution`."""
    parsed = {}
    for name, value in spec.items():
        try:
            if isinstance(value, list):
                parsed[name] = Distribution(kind="choice", values=value)
            else:
                parsed[name] = Distribution(**value)
        except (ValidationError, TypeError) as e:
            raise InvalidParameterError(f"invalid distribution for {name!r}: {e}") from e
    return parsed


def random_candidates(distributions: Dict[str, Distribution], n_iter: int, seed: int = 0) -> List[ParamMap]:
    """n_iter seeded draws; within a draw parameters are sampled in declaration order."""
    if n_iter < 1:
        raise InvalidParameterError("n_iter must be at least 1")
    stream = SeededStream(seed)
    return [{name: dist.draw(stream) for name, dist in distributions.items()} for _ in range(n_iter)]


@dataclass
class CandidateResult:
    params: ParamMap
    fold_scores: List[float]
    error: Optional[str] = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_scores))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_scores)) if np.all(np.isfinite(self.fold_scores)) else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {"params": self.params, "mean": self.mean, "std": self.std,
                "fold_scores": self.fold_scores, "error": self.error}


@dataclass
class SearchResult:
    """Per-candidate fold statistics, the winner and its refit model."""
    algorithm: str
    metric: str
    candidates: List[CandidateResult]
    best_index: int
    model: Optional[FittedModel] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def best_params(self) -> ParamMap:
        return self.candidates[self.best_index].params

    @property
    def best_score(self) -> float:
        return self.candidates[self.best_index].mean

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "metric": self.metric,
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "candidates": [c.to_dict() for c in self.candidates],
        }


def fold_score(
    name: str,
    params: ParamMap,
    d: SSLDataset,
    fold: Fold,
    metric: str,
    seed: int = 0
) -> Tuple[float, Optional[str]]:
    """Score of one candidate on one fold; fit failures and non-finite scores score -inf."""
    train, test = fold
    fold_data = SSLDataset(X=d.X[train], y=np.asarray(d.y)[train], unlabeled_X=d.unlabeled_X)
    try:
        model = estimator_fit(name, params, fold_data, seed)
        prediction = model.predict(d.X[test])
        score = search_score(metric, np.asarray(d.y)[test], prediction.labels, prediction.scores, model.classes)
    except SSLForgeError as e:
        return -math.inf, f"{type(e).__name__}: {e}"
    if not math.isfinite(score):
        return -math.inf, f"non-finite {metric} score {score}"
    return score, None


def evaluate_candidates(
    name: str,
    candidates: List[ParamMap],
    d: SSLDataset,
    metric: str,
    k: int = 5,
    seed: int = 0,
    stratified: Optional[bool] = None,
    n_jobs: Optional[int] = None,
    log: logging.Logger = logger
) -> SearchResult:
    """Cross-validate every candidate and refit the best one on all the data."""
    estimator_cls = get_estimator_class(name)
    info = get_metric(metric)
    if info.task != estimator_cls.task:
        raise ConfigError(f"metric {metric} ({info.task.value}) does not fit {name} ({estimator_cls.task.value})")
    if stratified is None:
        stratified = estimator_cls.task == TaskKind.CLASSIFICATION
    folds = kfold_split(len(d.y), k, stratified, seed, d.y if stratified else None, log)
    n_jobs = n_jobs or thread_cap()
    log.info(f"Evaluating {len(candidates)} candidates of {name} over {k} folds with {n_jobs} workers")
    outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(fold_score)(name, params, d, fold, metric, seed) for params in candidates for fold in folds
    )
    results = []
    for c, params in enumerate(candidates):
        chunk = outcomes[c * k:(c + 1) * k]
        errors = [e for _, e in chunk if e]
        if errors:
            log.warning(f"candidate {params} disqualified: {errors[0]}")
        results.append(CandidateResult(params=params, fold_scores=[s for s, _ in chunk],
                                       error=errors[0] if errors else None))
    means = np.array([r.mean for r in results])
    if not np.any(np.isfinite(means)):
        raise AlgorithmError(f"every {name} candidate failed: {results[0].error}")
    best = int(np.argmax(means))
    model = estimator_fit(name, results[best].params, d, seed)
    log.info(f"Best {name} candidate {results[best].params} with mean {metric} score {means[best]:.6g}")
    return SearchResult(algorithm=name, metric=metric, candidates=results, best_index=best, model=model)


def grid_search_fit(name: str, grid: Dict[str, Sequence[Any]], d: SSLDataset, metric: str, k: int = 5,
                    seed: int = 0, n_jobs: Optional[int] = None, stratified: Optional[bool] = None) -> SearchResult:
    return evaluate_candidates(name, grid_candidates(grid), d, metric, k, seed, stratified, n_jobs)


def random_search_fit(name: str, distributions: Dict[str, Union[list, dict]], d: SSLDataset, metric: str,
                      n_iter: int = 10, k: int = 5, seed: int = 0, n_jobs: Optional[int] = None,
                      stratified: Optional[bool] = None) -> SearchResult:
    candidates = random_candidates(parse_distributions(distributions), n_iter, seed)
    return evaluate_candidates(name, candidates, d, metric, k, seed, stratified, n_jobs)
