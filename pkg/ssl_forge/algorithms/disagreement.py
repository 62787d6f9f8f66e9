"""
Disagreement-based meta-algorithms: co-training over two feature views and
tri-training over three bootstrap learners.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from ssl_forge.algorithms.supervised import BaseLearnerSpec
from ssl_forge.core.dataset import SSLDataset, argmax_lowest, normalize_rows
from ssl_forge.core.estimator import Estimator, ScoreState
from ssl_forge.core.exceptions import DataValidationError, InvalidParameterError
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register
from ssl_forge.core.rng import SeededStream


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ViewSplit:
    """Two disjoint, nonempty feature-index lists covering every column."""
    view1: Tuple[int, ...]
    view2: Tuple[int, ...]

    @classmethod
    def random(cls, n_features: int, stream: SeededStream) -> "ViewSplit":
        if n_features < 2:
            raise DataValidationError("co-training needs at least two features to split into views")
        order = stream.permutation(n_features)
        half = n_features // 2
        return cls(tuple(sorted(int(i) for i in order[:half])), tuple(sorted(int(i) for i in order[half:])))

    def check(self, n_features: int) -> "ViewSplit":
        first, second = set(self.view1), set(self.view2)
        if not first or not second:
            raise InvalidParameterError("both views need at least one feature")
        if first & second:
            raise InvalidParameterError(f"views overlap on features {sorted(first & second)}")
        if first | second != set(range(n_features)):
            raise InvalidParameterError(f"views must cover all {n_features} features exactly")
        return self


@dataclass(frozen=True)
class CoTrainingState(ScoreState):
    """Two view learners; class scores are the normalized product of their probabilities."""
    learner1: Any
    learner2: Any
    views: ViewSplit

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        p1 = self.learner1.predict_proba(X[:, list(self.views.view1)])
        p2 = self.learner2.predict_proba(X[:, list(self.views.view2)])
        return normalize_rows(p1 * p2)


def _top_confident(proba: np.ndarray, pool: np.ndarray, counts: List[int]) -> List[Tuple[int, int]]:
    """(unlabeled index, class) picks: the `counts[c]` pool rows predicted c with highest probability."""
    predicted = argmax_lowest(proba)
    picks = []
    for c, count in enumerate(counts):
        rows = np.flatnonzero(predicted == c)
        if count <= 0 or rows.size == 0:
            continue
        order = rows[np.argsort(-proba[rows, c], kind="stable")][:count]
        picks.extend((int(pool[r]), c) for r in order)
    return picks


def co_training_fit(
    d: SSLDataset,
    base: BaseLearnerSpec,
    views: Optional[ViewSplit] = None,
    p: int = 1,
    n: int = 3,
    pool: int = 75,
    rounds: int = 30,
    seed: int = 0,
    log: logging.Logger = logger
) -> Tuple[CoTrainingState, Dict[str, Any]]:
    """
    Blum-Mitchell co-training.

    Each round both learners fit their own labeled sets, label their most
    confident pool rows (binary: p positives and n negatives; multiclass: p
    per class) and hand those rows to the OTHER learner. Picked rows leave
    the pool for good; the pool is refilled from the remaining unlabeled rows.
    """
    learner = base.build(need_proba=True)
    stream = SeededStream(seed)
    views = (views or ViewSplit.random(d.n_features, stream)).check(d.n_features)
    cols1, cols2 = list(views.view1), list(views.view2)
    K = d.n_classes
    counts = [n, p] if K == 2 else [p] * K

    labeled1 = [(d.X, d.y)]
    labeled2 = [(d.X, d.y)]
    remaining = stream.permutation(d.n_unlabeled)
    active = np.sort(remaining[:pool])
    remaining = remaining[pool:]
    added = 0
    completed = 0
    for completed in range(rounds):
        if active.size == 0:
            break
        h1 = learner.fit(*_stack(labeled1, cols1), K)
        h2 = learner.fit(*_stack(labeled2, cols2), K)
        X_pool = d.unlabeled_X[active]
        picks1 = _top_confident(h1.predict_proba(X_pool[:, cols1]), active, counts)
        picks2 = _top_confident(h2.predict_proba(X_pool[:, cols2]), active, counts)
        for target, picks in ((labeled2, picks1), (labeled1, picks2)):
            if picks:
                idx = np.array([i for i, _ in picks])
                target.append((d.unlabeled_X[idx], np.array([c for _, c in picks], dtype=np.int64)))
        picked = {i for i, _ in picks1} | {i for i, _ in picks2}
        added += len(picks1) + len(picks2)
        active = np.array([i for i in active if i not in picked], dtype=np.int64)
        refill = pool - active.size
        active = np.sort(np.concatenate([active, remaining[:refill]])).astype(np.int64)
        remaining = remaining[refill:]
        log.debug(f"co_training round {completed + 1}: {len(picks1)} + {len(picks2)} picks, pool {active.size}")
    else:
        completed = rounds

    state = CoTrainingState(
        learner1=learner.fit(*_stack(labeled1, cols1), K),
        learner2=learner.fit(*_stack(labeled2, cols2), K),
        views=views,
    )
    return state, {"rounds": completed, "n_pseudo_labeled": added, "views": [list(views.view1), list(views.view2)]}


def _stack(parts, cols):
    return np.vstack([X[:, cols] for X, _ in parts]), np.concatenate([y for _, y in parts])


def tri_training_update_rule(e_t: float, e_prev: float, l_prev: int, n_candidates: int) -> Tuple[int, Optional[int]]:
    """
    Size check of one tri-training update.

    Returns the (possibly initialized) l_prev and the number of candidates to
    use, or None when the learner must skip this round. An accepted size s
    always satisfies e_t * s < e_prev * l_prev.
    """
    if not e_t < e_prev:
        return l_prev, None
    if l_prev == 0:
        l_prev = int(math.floor(e_t / (e_prev - e_t))) + 1
    if n_candidates <= l_prev:
        return l_prev, None
    if e_t * n_candidates < e_prev * l_prev:
        return l_prev, n_candidates
    subsample = int(math.ceil(e_prev * l_prev / e_t - 1.0 - 1e-9))
    if subsample >= l_prev + 1:
        return l_prev, subsample
    return l_prev, None


def joint_error(pred_j: np.ndarray, pred_k: np.ndarray, y: np.ndarray) -> float:
    """Error of the pair on the labeled rows where they agree, floored at 1e-10."""
    agree = pred_j == pred_k
    if not np.any(agree):
        return 1.0
    return max(float(np.sum(agree & (pred_j != y)) / np.sum(agree)), 1e-10)


@dataclass(frozen=True)
class TriTrainingState(ScoreState):
    """Three learners voting; scores are vote fractions."""
    learners: Tuple[Any, Any, Any]
    n_classes: int

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((X.shape[0], self.n_classes))
        for h in self.learners:
            votes[np.arange(X.shape[0]), h.predict(X)] += 1.0
        return votes / len(self.learners)


def tri_training_fit(
    d: SSLDataset,
    base: BaseLearnerSpec,
    max_rounds: int = 100,
    seed: int = 0,
    log: logging.Logger = logger
) -> Tuple[TriTrainingState, List[Dict[str, Any]]]:
    """
    Zhou-Li tri-training.

    Learners start on bootstrap resamples of the labeled set. Every round each
    learner i may take the unlabeled rows its two companions agree on, sized by
    `tri_training_update_rule`; all refits happen after the round's decisions.
    Stops when no learner updates.
    """
    learner = base.build()
    stream = SeededStream(seed)
    K = d.n_classes
    l = d.n_labeled
    learners = []
    for _ in range(3):
        idx = stream.integers(0, l, size=l)
        learners.append(learner.fit(d.X[idx], d.y[idx], K))
    e_prev = [0.5, 0.5, 0.5]
    l_prev = [0, 0, 0]
    accepted: List[Dict[str, Any]] = []

    for round_no in range(1, max_rounds + 1):
        labeled_preds = [h.predict(d.X) for h in learners]
        unlabeled_preds = [h.predict(d.unlabeled_X) if d.n_unlabeled else np.zeros(0, dtype=np.int64)
                           for h in learners]
        updates = {}
        for i in range(3):
            j, k = [m for m in range(3) if m != i]
            e_t = joint_error(labeled_preds[j], labeled_preds[k], d.y)
            candidates = np.flatnonzero(unlabeled_preds[j] == unlabeled_preds[k])
            l_prev[i], size = tri_training_update_rule(e_t, e_prev[i], l_prev[i], candidates.size)
            if size is None:
                continue
            if size < candidates.size:
                candidates = np.sort(candidates[stream.choice(candidates.size, size)])
            assert e_t * size < e_prev[i] * l_prev[i], "tri-training accepted a non-decreasing error bound"
            updates[i] = (candidates, unlabeled_preds[j][candidates], e_t)
        if not updates:
            break
        for i, (candidates, pseudo, e_t) in updates.items():
            learners[i] = learner.fit(np.vstack([d.X, d.unlabeled_X[candidates]]), np.concatenate([d.y, pseudo]), K)
            accepted.append({"round": round_no, "learner": i, "e_t": e_t, "e_prev": e_prev[i],
                             "l_prev": l_prev[i], "size": int(candidates.size)})
            e_prev[i], l_prev[i] = e_t, int(candidates.size)
        log.debug(f"tri_training round {round_no}: learners {sorted(updates)} updated")
    return TriTrainingState(learners=tuple(learners), n_classes=K), accepted


class CoTrainingParams(ComponentParams):
    base: BaseLearnerSpec = Field(default_factory=BaseLearnerSpec, description="Base learner for both views")
    views: Optional[List[List[int]]] = Field(None, description="Two disjoint feature-index lists")
    p: int = Field(1, ge=0, description="Positive picks per round (per class when multiclass)")
    n: int = Field(3, ge=0, description="Negative picks per round (binary only)")
    pool: int = Field(75, ge=1, description="Size of the unlabeled pool")
    rounds: int = Field(30, ge=0, description="Maximum co-training rounds")

    @model_validator(mode="after")
    def check_views(self) -> "CoTrainingParams":
        if self.views is not None and len(self.views) != 2:
            raise ValueError("views must hold exactly two index lists")
        return self


class TriTrainingParams(ComponentParams):
    base: BaseLearnerSpec = Field(default_factory=BaseLearnerSpec, description="Base learner of the three members")
    max_rounds: int = Field(100, ge=0, description="Cap on update rounds")


@register
class CoTraining(Estimator):
    """Two-view co-training."""
    name = "co_training"
    Params = CoTrainingParams
    probabilistic = True

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> CoTrainingState:
        p = self.params
        views = ViewSplit(tuple(p.views[0]), tuple(p.views[1])) if p.views else None
        state, info = co_training_fit(dataset, p.base, views, p.p, p.n, p.pool, p.rounds, seed, self.logger)
        diagnostics.update(info)
        return state


@register
class TriTraining(Estimator):
    """Tri-training with majority vote."""
    name = "tri_training"
    Params = TriTrainingParams

    def _fit(self, dataset, seed, diagnostics):
        state, accepted = tri_training_fit(dataset, self.params.base, self.params.max_rounds, seed, self.logger)
        diagnostics.update({"accepted_updates": accepted, "n_updates": len(accepted)})
        return state
