"""
Graph-based transductive learning: kNN affinity graphs, label propagation
(hard clamping) and label spreading (normalized-graph soft clamping).
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import Field
from scipy.spatial.distance import cdist

from ssl_forge.core.dataset import SSLDataset, argmax_lowest, normalize_rows
from ssl_forge.core.estimator import Estimator, ScoreState
from ssl_forge.core.exceptions import DataValidationError, InvalidParameterError
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register


logger = logging.getLogger(__name__)


def scale_aware_gamma(X_all: np.ndarray) -> float:
    """1 / (n_features * mean column variance), or 1.0 for constant data."""
    spread = X_all.shape[1] * float(np.mean(X_all.var(axis=0))) if X_all.shape[0] else 0.0
    return 1.0 / spread if spread > 0 else 1.0


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, metric="sqeuclidean"))


@dataclass(frozen=True)
class AffinityGraph:
    """Symmetric nonnegative weights over labeled-then-unlabeled nodes, zero diagonal."""
    W: sp.csr_matrix
    n_labeled: int

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def degrees(self) -> np.ndarray:
        return np.asarray(self.W.sum(axis=1)).ravel()

    def to_dense(self) -> np.ndarray:
        return self.W.toarray()


def build_knn_graph(
    X_all: np.ndarray,
    k: int = 7,
    mode: str = "rbf",
    gamma: Optional[float] = None,
    n_labeled: int = 0
) -> AffinityGraph:
    """
    Directed kNN by Euclidean distance, symmetrized by elementwise max.

    rbf weights are exp(-gamma * ||xi - xj||^2); connectivity weights are 1.
    Exact distance ties pick the lower index.
    """
    n = X_all.shape[0]
    if not 1 <= k < n:
        raise InvalidParameterError(f"graph k must satisfy 1 <= k < n, got k={k}, n={n}")
    if mode not in ("rbf", "connectivity"):
        raise InvalidParameterError(f"unknown graph mode {mode!r}")
    if gamma is None:
        gamma = scale_aware_gamma(X_all)
    if mode == "rbf" and gamma <= 0:
        raise InvalidParameterError("gamma must be positive for rbf graphs")

    sq = cdist(X_all, X_all, metric="sqeuclidean")
    np.fill_diagonal(sq, np.inf)
    neighbors = np.argsort(sq, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = neighbors.ravel()
    if mode == "rbf":
        weights = np.exp(-gamma * sq[rows, cols])
    else:
        weights = np.ones(rows.size)
    directed = sp.csr_matrix((weights, (rows, cols)), shape=(n, n))
    W = directed.maximum(directed.T).tocsr()
    W.eliminate_zeros()

    graph = AffinityGraph(W=W, n_labeled=n_labeled)
    isolated = int(np.sum(graph.degrees() == 0))
    if isolated:
        logger.warning(f"{isolated} nodes have zero degree after rbf underflow; they receive uniform scores")
    return graph


@dataclass(frozen=True)
class LabelDistribution:
    """Class scores F over all nodes plus iteration bookkeeping."""
    F: np.ndarray
    n_iter: int
    converged: bool
    final_delta: float

    def normalized(self) -> np.ndarray:
        """Rows summing to 1; zero rows become uniform."""
        return normalize_rows(self.F)

    def labels(self) -> np.ndarray:
        return argmax_lowest(self.normalized())


def _prior_matrix(y: np.ndarray, n: int, n_classes: int) -> np.ndarray:
    Y = np.zeros((n, n_classes))
    Y[np.arange(len(y)), y] = 1.0
    return Y


def label_propagation_fit(
    g: AffinityGraph,
    y: np.ndarray,
    n_classes: int,
    tol: float = 1e-6,
    max_iter: int = 1000
) -> LabelDistribution:
    """F <- D^-1 W F with labeled rows re-clamped to one-hot after every sweep."""
    n_labeled = len(y)
    Y = _prior_matrix(y, g.n, n_classes)
    degrees = g.degrees()
    inv = np.divide(1.0, degrees, out=np.zeros_like(degrees), where=degrees > 0)
    P = sp.diags(inv) @ g.W
    F = Y.copy()
    delta = np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        F_new = P @ F
        F_new[:n_labeled] = Y[:n_labeled]
        delta = float(np.max(np.abs(F_new - F))) if F.size else 0.0
        F = F_new
        logger.debug(f"label_propagation sweep {n_iter}: max|dF|={delta:.3e}")
        if delta < tol:
            break
    return LabelDistribution(F=F, n_iter=n_iter, converged=delta < tol, final_delta=delta)


def normalized_affinity(g: AffinityGraph) -> sp.csr_matrix:
    """S = D^-1/2 W D^-1/2 with zero-degree nodes left at zero."""
    degrees = g.degrees()
    inv_sqrt = np.divide(1.0, np.sqrt(degrees), out=np.zeros_like(degrees), where=degrees > 0)
    D = sp.diags(inv_sqrt)
    return (D @ g.W @ D).tocsr()


def label_spreading_fit(
    g: AffinityGraph,
    y: np.ndarray,
    n_classes: int,
    alpha: float = 0.99,
    tol: float = 1e-6,
    max_iter: int = 1000
) -> LabelDistribution:
    """F <- alpha S F + (1 - alpha) Y from F = Y; the fixed point is (1 - alpha)(I - alpha S)^-1 Y."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    Y = _prior_matrix(y, g.n, n_classes)
    S = normalized_affinity(g)
    F = Y.copy()
    delta = np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        F_new = alpha * (S @ F) + (1.0 - alpha) * Y
        delta = float(np.max(np.abs(F_new - F))) if F.size else 0.0
        F = F_new
        logger.debug(f"label_spreading sweep {n_iter}: max|dF|={delta:.3e}")
        if delta < tol:
            break
    return LabelDistribution(F=F, n_iter=n_iter, converged=delta < tol, final_delta=delta)


@dataclass(frozen=True)
class TransductiveGraphState(ScoreState):
    """Scores of the training nodes; new rows take the scores of their nearest training node."""
    X_all: np.ndarray
    scores: np.ndarray

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        nearest = np.argmin(cdist(X, self.X_all, metric="sqeuclidean"), axis=1)
        return self.scores[nearest]


class GraphParams(ComponentParams):
    k: int = Field(7, ge=1, description="Neighbors per node in the kNN graph")
    mode: Literal["rbf", "connectivity"] = Field("rbf", description="Edge weighting")
    gamma: Optional[float] = Field(None, gt=0.0, description="rbf width; scale-aware default when omitted")
    tol: float = Field(1e-6, gt=0.0, description="Stop when max|dF| falls below tol")
    max_iter: int = Field(1000, ge=1, description="Maximum sweeps")


class SpreadingParams(GraphParams):
    alpha: float = Field(0.99, gt=0.0, lt=1.0, description="Weight of the propagated term")


class _GraphEstimator(Estimator):
    probabilistic = True

    def _propagate(self, graph: AffinityGraph, dataset: SSLDataset) -> LabelDistribution:
        raise NotImplementedError

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> TransductiveGraphState:
        X_all = dataset.X_all
        p = self.params
        k = min(p.k, X_all.shape[0] - 1)
        if k < 1:
            raise DataValidationError("graph methods need at least two samples")
        graph = build_knn_graph(X_all, k, p.mode, p.gamma, dataset.n_labeled)
        result = self._propagate(graph, dataset)
        scores = result.normalized()
        diagnostics.update({
            "n_iter": result.n_iter,
            "converged": result.converged,
            "final_delta": result.final_delta,
            "transductive_labels": dataset.classes[argmax_lowest(scores[dataset.n_labeled:])],
        })
        if not result.converged:
            diagnostics["warnings"].append(
                f"no convergence after {result.n_iter} sweeps (max|dF|={result.final_delta:.3e})"
            )
        return TransductiveGraphState(X_all=X_all, scores=scores)


@register
class LabelPropagation(_GraphEstimator):
    """Hard-clamped propagation over a kNN graph."""
    name = "label_propagation"
    Params = GraphParams

    def _propagate(self, graph, dataset):
        return label_propagation_fit(graph, dataset.y, dataset.n_classes, self.params.tol, self.params.max_iter)


@register
class LabelSpreading(_GraphEstimator):
    """Soft-clamped spreading over the symmetrically normalized kNN graph."""
    name = "label_spreading"
    Params = SpreadingParams

    def _propagate(self, graph, dataset):
        p = self.params
        return label_spreading_fit(graph, dataset.y, dataset.n_classes, p.alpha, p.tol, p.max_iter)
