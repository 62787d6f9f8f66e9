"""
Boosting-style semi-supervised learners: Assemble (AdaBoost over labeled and
pseudo-labeled rows) and SemiBoost (similarity-guided boosting). Both are
binary; dense class 0 maps to -1 and class 1 to +1.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field

from ssl_forge.algorithms.graph import rbf_kernel, scale_aware_gamma
from ssl_forge.algorithms.margin import require_binary
from ssl_forge.algorithms.supervised import BaseLearnerSpec, FittedKnnClassifier, fit_knn
from ssl_forge.core.dataset import SSLDataset
from ssl_forge.core.estimator import Estimator, ScoreState
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register


logger = logging.getLogger(__name__)

ALPHA_CAP = 10.0


def _signed(dense: np.ndarray) -> np.ndarray:
    return np.where(dense > 0, 1.0, -1.0)


def _dense(signed: np.ndarray) -> np.ndarray:
    return (signed > 0).astype(np.int64)


@dataclass(frozen=True)
class BoostEnsemble(ScoreState):
    """
    H(x) = sum_t alpha_t h_t(x) with h_t in {-1, +1}.

    An empty ensemble predicts with the 1-NN fallback fitted on the labeled rows.
    """
    members: Tuple[Tuple[Any, float], ...]
    fallback: FittedKnnClassifier
    weight_history: Tuple[np.ndarray, ...] = field(default_factory=tuple)

    @property
    def alphas(self) -> List[float]:
        return [alpha for _, alpha in self.members]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if not self.members:
            return _signed(self.fallback.predict(X))
        H = np.zeros(X.shape[0])
        for learner, alpha in self.members:
            H += alpha * _signed(learner.predict(X))
        return H

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        H = self.decision_function(X)
        return np.column_stack([-H, H])


def assemble_fit(
    d: SSLDataset,
    base: BaseLearnerSpec,
    T: int = 30,
    beta: float = 0.9,
    log: logging.Logger = logger
) -> BoostEnsemble:
    """
    Assemble: AdaBoost over labeled rows and 1-NN pseudo-labeled unlabeled rows.

    Initial costs are beta/l (labeled) and (1 - beta)/u (unlabeled),
    normalized. After each round unlabeled pseudo-labels become sign(H)
    (0 counts as -1) and weights are w0 * exp(-y H), renormalized. Rounds
    stop when the weighted error reaches 0.5; a zero-error learner joins with
    alpha = 10 and ends the loop.
    """
    require_binary(d, "assemble")
    learner = base.build(need_weights=True)
    l, u = d.n_labeled, d.n_unlabeled
    fallback = fit_knn(d.X, d.y, 1, 2.0, False, 2)
    X_all = d.X_all
    y_all = _signed(d.y)
    if u:
        y_all = np.concatenate([y_all, _signed(fallback.predict(d.unlabeled_X))])
        w0 = np.concatenate([np.full(l, beta / l), np.full(u, (1.0 - beta) / u)])
    else:
        w0 = np.full(l, 1.0 / l)
    w0 = w0 / w0.sum()
    w = w0.copy()
    H = np.zeros(X_all.shape[0])
    members = []
    history = [w.copy()]
    for t in range(1, T + 1):
        h = learner.fit(X_all, _dense(y_all), 2, sample_weight=w)
        pred = _signed(h.predict(X_all))
        eps = float(np.sum(w[pred != y_all]))
        if eps >= 0.5:
            log.debug(f"assemble round {t}: weighted error {eps:.4f} >= 0.5, stopping")
            break
        if eps == 0.0:
            members.append((h, ALPHA_CAP))
            log.debug(f"assemble round {t}: perfect learner absorbed with alpha={ALPHA_CAP}")
            break
        alpha = min(0.5 * math.log((1.0 - eps) / eps), ALPHA_CAP)
        members.append((h, alpha))
        H += alpha * pred
        if u:
            y_all[l:] = np.where(H[l:] > 0, 1.0, -1.0)
        w = w0 * np.exp(-y_all * H)
        w = w / w.sum()
        history.append(w.copy())
        log.debug(f"assemble round {t}: error={eps:.4f}, alpha={alpha:.4f}")
    return BoostEnsemble(members=tuple(members), fallback=fallback, weight_history=tuple(history))


def semiboost_pq(S_ul: np.ndarray, S_uu: np.ndarray, y_signed: np.ndarray, H_u: np.ndarray, C: float = 1.0):
    """
    Confidence terms of every unlabeled row.

    p_i = sum_{j in L, y_j=+1} S_ij e^(-2H_i) + (C/2) sum_{j in U} S_ij e^(H_j - H_i)
    q_i = sum_{j in L, y_j=-1} S_ij e^(2H_i)  + (C/2) sum_{j in U} S_ij e^(H_i - H_j)
    """
    positive = S_ul[:, y_signed > 0].sum(axis=1)
    negative = S_ul[:, y_signed < 0].sum(axis=1)
    with np.errstate(over="ignore"):
        p = positive * np.exp(-2.0 * H_u) + 0.5 * C * (S_uu @ np.exp(H_u)) * np.exp(-H_u)
        q = negative * np.exp(2.0 * H_u) + 0.5 * C * (S_uu @ np.exp(-H_u)) * np.exp(H_u)
    return p, q


def semiboost_fit(
    d: SSLDataset,
    base: BaseLearnerSpec,
    T: int = 20,
    C: float = 1.0,
    sample_fraction: float = 0.1,
    gamma: Optional[float] = None,
    log: logging.Logger = logger
) -> Tuple[BoostEnsemble, Dict[str, Any]]:
    """
    SemiBoost over an rbf similarity of all rows.

    Each round selects the ceil(sample_fraction * u) most confident unlabeled
    rows (at least one), fits the base learner on labeled rows (weight 1) and
    the selection (weights proportional to confidence, mean 1), and adds it with
    alpha = (1/4) ln(agreeing confidence / disagreeing confidence). Stops when
    alpha <= 0; a learner that agrees everywhere joins with alpha = 10 and ends
    the loop.
    """
    require_binary(d, "semiboost")
    learner = base.build(need_weights=True)
    fallback = fit_knn(d.X, d.y, 1, 2.0, False, 2)
    l, u = d.n_labeled, d.n_unlabeled
    info: Dict[str, Any] = {"rounds": 0}
    if u == 0:
        info["warning"] = "no unlabeled data; predicting with the 1-NN fallback"
        return BoostEnsemble(members=(), fallback=fallback), info

    X_all = d.X_all
    gamma = scale_aware_gamma(X_all) if gamma is None else gamma
    S_ul = rbf_kernel(d.unlabeled_X, d.X, gamma)
    S_uu = rbf_kernel(d.unlabeled_X, d.unlabeled_X, gamma)
    y_signed = _signed(d.y)
    H_u = np.zeros(u)
    members = []
    m = max(1, int(math.ceil(sample_fraction * u)))
    for t in range(1, T + 1):
        p, q = semiboost_pq(S_ul, S_uu, y_signed, H_u, C)
        z = np.where(p > q, 1.0, -1.0)
        confidence = np.abs(p - q)
        selected = np.argsort(-confidence, kind="stable")[:m]
        mean_conf = confidence[selected].mean()
        sel_weights = confidence[selected] / mean_conf if mean_conf > 0 else np.ones(selected.size)
        h = learner.fit(
            np.vstack([d.X, d.unlabeled_X[selected]]),
            np.concatenate([d.y, _dense(z[selected])]),
            2,
            sample_weight=np.concatenate([np.ones(l), sel_weights]),
        )
        h_u = _signed(h.predict(d.unlabeled_X))
        agree = float(confidence[z == h_u].sum())
        disagree = float(confidence[z != h_u].sum())
        if disagree == 0.0:
            if agree > 0.0:
                members.append((h, ALPHA_CAP))
                info["rounds"] = t
            break
        alpha = 0.25 * math.log(agree / disagree) if agree > 0 else -math.inf
        if alpha <= 0:
            log.debug(f"semiboost round {t}: alpha={alpha:.4f} <= 0, stopping")
            break
        alpha = min(alpha, ALPHA_CAP)
        members.append((h, alpha))
        H_u = H_u + alpha * h_u
        info["rounds"] = t
        log.debug(f"semiboost round {t}: alpha={alpha:.4f}")
    return BoostEnsemble(members=tuple(members), fallback=fallback), info


class AssembleParams(ComponentParams):
    base: BaseLearnerSpec = Field(default_factory=lambda: BaseLearnerSpec(kind="decision_stump"),
                                  description="Weighted base learner")
    T: int = Field(30, ge=1, description="Maximum boosting rounds")
    beta: float = Field(0.9, ge=0.0, le=1.0, description="Share of the initial weight on labeled rows")


class SemiBoostParams(ComponentParams):
    base: BaseLearnerSpec = Field(default_factory=lambda: BaseLearnerSpec(kind="decision_stump"),
                                  description="Weighted base learner")
    T: int = Field(20, ge=1, description="Maximum boosting rounds")
    C: float = Field(1.0, ge=0.0, description="Weight of the unlabeled-unlabeled similarity term")
    sample_fraction: float = Field(0.1, gt=0.0, le=1.0, description="Share of unlabeled rows selected per round")
    gamma: Optional[float] = Field(None, gt=0.0, description="rbf width; scale-aware default when omitted")


@register
class Assemble(Estimator):
    """Adaptive semi-supervised ensemble."""
    name = "assemble"
    Params = AssembleParams

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> BoostEnsemble:
        p = self.params
        ensemble = assemble_fit(dataset, p.base, p.T, p.beta, self.logger)
        diagnostics.update({"alphas": ensemble.alphas, "rounds": len(ensemble.members)})
        if not ensemble.members:
            diagnostics["warnings"].append("empty ensemble; predicting with the 1-NN fallback")
        return ensemble


@register
class SemiBoost(Estimator):
    """Similarity-guided semi-supervised boosting."""
    name = "semiboost"
    Params = SemiBoostParams

    def _fit(self, dataset, seed, diagnostics):
        p = self.params
        ensemble, info = semiboost_fit(dataset, p.base, p.T, p.C, p.sample_fraction, p.gamma, self.logger)
        if "warning" in info:
            diagnostics["warnings"].append(info.pop("warning"))
        elif not ensemble.members:
            diagnostics["warnings"].append("empty ensemble; predicting with the 1-NN fallback")
        diagnostics.update(info)
        diagnostics["alphas"] = ensemble.alphas
        return ensemble
