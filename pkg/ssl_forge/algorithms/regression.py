"""
COREG: co-training regression with two kNN regressors that differ in their
Minkowski order.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field

from ssl_forge.algorithms.supervised import FittedKnnRegressor, fit_knn, minkowski_neighbors
from ssl_forge.core.dataset import SSLDataset, TaskKind
from ssl_forge.core.estimator import Estimator, FittedState
from ssl_forge.core.exceptions import DataValidationError
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register
from ssl_forge.core.rng import SeededStream


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoRegState(FittedState):
    """Two kNN regressors; the prediction is their mean."""
    regressor1: FittedKnnRegressor
    regressor2: FittedKnnRegressor

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.regressor1.predict(X) + self.regressor2.predict(X)) / 2.0

    def decide(self, X):
        return self.predict(X), None


def coreg_delta(X_l: np.ndarray, y_l: np.ndarray, x_u: np.ndarray, k: int, p: float) -> Tuple[float, float]:
    """
    Confidence of labeling x_u with the regressor over (X_l, y_l).

    Returns (y_hat, delta): the current prediction for x_u and the drop in
    squared error on its k labeled neighbors once (x_u, y_hat) is added.
    """
    current = fit_knn(X_l, y_l, k, p, False, regression=True)
    y_hat = float(current.predict(x_u[None, :])[0])
    omega, _ = minkowski_neighbors(x_u[None, :], X_l, k, p)
    omega = omega[0]
    refit = fit_knn(np.vstack([X_l, x_u]), np.append(y_l, y_hat), k, p, False, regression=True)
    before = y_l[omega] - current.predict(X_l[omega])
    after = y_l[omega] - refit.predict(X_l[omega])
    return y_hat, float(np.sum(before ** 2) - np.sum(after ** 2))


def coreg_fit(
    d: SSLDataset,
    k1: int = 3,
    k2: int = 3,
    p1: float = 2.0,
    p2: float = 5.0,
    rounds: int = 100,
    pool: int = 100,
    seed: int = 0,
    log: logging.Logger = logger
) -> Tuple[CoRegState, Dict[str, Any]]:
    """
    Each round both regressors score a fresh seeded pool of the remaining
    unlabeled rows and hand their best candidate (largest positive delta) to
    the companion. Both picks are applied after the round; the second side
    never picks the first side's row. Stops early when neither side adds.
    """
    if d.n_labeled < max(k1, k2) + 1:
        raise DataValidationError(f"coreg needs at least {max(k1, k2) + 1} labeled rows, got {d.n_labeled}")
    stream = SeededStream(seed)
    pools = [[d.X.copy(), d.y.astype(np.float64).copy()], [d.X.copy(), d.y.astype(np.float64).copy()]]
    sides = [(k1, p1), (k2, p2)]
    remaining = np.arange(d.n_unlabeled)
    added: List[Dict[str, Any]] = []
    completed = 0
    for completed in range(rounds):
        if remaining.size == 0:
            break
        picks: List[Optional[Tuple[int, float, float]]] = []
        taken = set()
        for side, (k, p) in enumerate(sides):
            available = np.array([i for i in remaining if i not in taken], dtype=np.int64)
            if available.size == 0:
                picks.append(None)
                continue
            candidates = np.sort(available[stream.choice(available.size, min(pool, available.size))])
            X_l, y_l = pools[side]
            best = None
            for u in candidates:
                y_hat, delta = coreg_delta(X_l, y_l, d.unlabeled_X[u], k, p)
                if delta > 0 and (best is None or delta > best[2]):
                    best = (int(u), y_hat, delta)
            picks.append(best)
            if best is not None:
                taken.add(best[0])
        if all(pick is None for pick in picks):
            log.debug(f"coreg round {completed + 1}: no confident candidate on either side; stopping")
            break
        for side, pick in enumerate(picks):
            if pick is None:
                continue
            u, y_hat, delta = pick
            assert delta > 0, "coreg accepted a non-positive delta"
            companion = pools[1 - side]
            companion[0] = np.vstack([companion[0], d.unlabeled_X[u]])
            companion[1] = np.append(companion[1], y_hat)
            added.append({"round": completed + 1, "side": side, "index": u, "delta": delta})
        remaining = np.array([i for i in remaining if i not in taken], dtype=np.int64)
    else:
        completed = rounds

    state = CoRegState(
        regressor1=fit_knn(pools[0][0], pools[0][1], k1, p1, False, regression=True),
        regressor2=fit_knn(pools[1][0], pools[1][1], k2, p2, False, regression=True),
    )
    return state, {"rounds": completed, "added": added, "n_added": len(added)}


class CoRegParams(ComponentParams):
    k1: int = Field(3, ge=1, description="Neighbors of the first regressor")
    k2: int = Field(3, ge=1, description="Neighbors of the second regressor")
    p1: float = Field(2.0, ge=1.0, description="Minkowski order of the first regressor")
    p2: float = Field(5.0, ge=1.0, description="Minkowski order of the second regressor")
    rounds: int = Field(100, ge=0, description="Maximum rounds")
    pool: int = Field(100, ge=1, description="Candidate pool size per side and round")


@register
class CoReg(Estimator):
    """Co-training kNN regression."""
    name = "coreg"
    task = TaskKind.REGRESSION
    Params = CoRegParams

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> CoRegState:
        p = self.params
        state, info = coreg_fit(dataset, p.k1, p.k2, p.p1, p.p2, p.rounds, p.pool, seed, self.logger)
        diagnostics.update(info)
        return state
