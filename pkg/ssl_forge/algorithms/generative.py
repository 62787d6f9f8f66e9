"""
Semi-supervised Gaussian mixture (one full-covariance Gaussian per class) fitted by EM.

Labeled samples keep one-hot responsibilities at their class; unlabeled
responsibilities follow the mixture posterior. Densities are evaluated in the
log domain through Cholesky factors.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import Field
from scipy.linalg import LinAlgError, cho_factor, solve_triangular
from scipy.special import logsumexp

from ssl_forge.core.dataset import SSLDataset, argmax_lowest
from ssl_forge.core.estimator import Estimator, ScoreState
from ssl_forge.core.exceptions import ConvergenceError, DegenerateProblemError
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GmmState(ScoreState):
    """Per-class mixture weights, means and covariances."""
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def component_log_density(self, X: np.ndarray) -> np.ndarray:
        """log N(x | mu_k, Sigma_k) for every row and class."""
        return np.column_stack([
            gaussian_log_density(X, self.means[k], self.covariances[k]) for k in range(len(self.weights))
        ])

    def weighted_log_density(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)[None, :] + self.component_log_density(X)

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        """Posterior responsibilities."""
        joint = self.weighted_log_density(X)
        return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))


def gaussian_log_density(X: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    try:
        chol, lower = cho_factor(cov, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as e:
        raise ConvergenceError(f"singular covariance despite regularization: {e}") from e
    L = np.tril(chol)
    z = solve_triangular(L, (X - mean).T, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    d = X.shape[1]
    return -0.5 * (d * np.log(2.0 * np.pi) + log_det + np.sum(z * z, axis=0))


def _m_step(X_all: np.ndarray, R: np.ndarray, reg: float) -> GmmState:
    mass = R.sum(axis=0)
    if np.any(mass <= 0):
        raise DegenerateProblemError(f"empty class in M-step (class masses {mass.tolist()})")
    d = X_all.shape[1]
    means = (R.T @ X_all) / mass[:, None]
    covariances = np.empty((R.shape[1], d, d))
    for k in range(R.shape[1]):
        centered = X_all - means[k]
        cov = (R[:, k, None] * centered).T @ centered / mass[k]
        covariances[k] = 0.5 * (cov + cov.T) + reg * np.eye(d)
    return GmmState(weights=mass / mass.sum(), means=means, covariances=covariances)


def _log_likelihood(state: GmmState, X: np.ndarray, y: np.ndarray, unlabeled_X: np.ndarray) -> Tuple[float, np.ndarray]:
    labeled = state.weighted_log_density(X)[np.arange(len(y)), y].sum()
    if unlabeled_X.shape[0] == 0:
        return float(labeled), np.zeros((0, len(state.weights)))
    joint = state.weighted_log_density(unlabeled_X)
    norm = logsumexp(joint, axis=1, keepdims=True)
    return float(labeled + norm.sum()), np.exp(joint - norm)


def ssgmm_fit(
    d: SSLDataset,
    max_iter: int = 300,
    tol: float = 1e-6,
    reg: float = 1e-6,
    seed: int = 0,
    log: logging.Logger = logger
) -> Tuple[GmmState, List[float], bool]:
    """
    EM with clamped labeled responsibilities.

    Starts from the labeled per-class MLE, then alternates E and M steps
    until the joint log-likelihood improves by less than `tol`. Returns the
    state, the log-likelihood trace (one value per fitted state) and whether
    the tolerance was met. The seed is accepted for interface symmetry;
    the labeled initialization is deterministic.
    """
    n_classes = d.n_classes
    if n_classes < 2:
        raise DegenerateProblemError("degenerate labeled set: SSGMM needs at least two classes")
    counts = np.bincount(d.y, minlength=n_classes)
    if np.any(counts == 0):
        raise DegenerateProblemError(f"degenerate labeled set: classes without samples {np.flatnonzero(counts == 0).tolist()}")

    labeled_R = np.zeros((d.n_labeled, n_classes))
    labeled_R[np.arange(d.n_labeled), d.y] = 1.0
    state = _m_step(d.X, labeled_R, reg)
    X_all = d.X_all
    ll, unlabeled_R = _log_likelihood(state, d.X, d.y, d.unlabeled_X)
    trace = [ll]
    converged = False
    for it in range(1, max_iter + 1):
        R = np.vstack([labeled_R, unlabeled_R])
        state = _m_step(X_all, R, reg)
        new_ll, unlabeled_R = _log_likelihood(state, d.X, d.y, d.unlabeled_X)
        if not np.isfinite(new_ll):
            raise ConvergenceError(f"non-finite log-likelihood at EM iteration {it}")
        trace.append(new_ll)
        log.debug(f"ssgmm iteration {it}: log-likelihood={new_ll:.6f}")
        if new_ll - ll < tol:
            converged = True
            break
        ll = new_ll
    return state, trace, converged


class SsgmmParams(ComponentParams):
    max_iter: int = Field(300, ge=1, description="Maximum EM iterations")
    tol: float = Field(1e-6, gt=0.0, description="Stop when the log-likelihood gain falls below tol")
    reg: float = Field(1e-6, gt=0.0, description="Ridge added to every covariance")


@register
class SSGMM(Estimator):
    """Semi-supervised Gaussian mixture classifier."""
    name = "ssgmm"
    Params = SsgmmParams
    probabilistic = True

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> GmmState:
        p = self.params
        state, trace, converged = ssgmm_fit(dataset, p.max_iter, p.tol, p.reg, seed, self.logger)
        diagnostics.update({
            "n_iter": len(trace) - 1,
            "converged": converged,
            "log_likelihood": trace,
            "transductive_labels": dataset.classes[argmax_lowest(state.class_scores(dataset.unlabeled_X))]
            if dataset.n_unlabeled else dataset.classes[:0],
        })
        if not converged:
            diagnostics["warnings"].append(f"EM stopped at max_iter={p.max_iter} before reaching tol")
        return state
