"""
Constrained clustering: COP-style k-means with must-link / cannot-link pairs
and seeded k-means where labeled rows initialize (and optionally clamp) the
clusters.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import Field
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from ssl_forge.core.dataset import SSLDataset, TaskKind
from ssl_forge.core.estimator import Estimator, FittedState
from ssl_forge.core.exceptions import (
    AlgorithmError, DegenerateProblemError, InfeasibleConstraintsError, InvalidParameterError,
)
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register
from ssl_forge.core.rng import SeededStream


logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class PairConstraints:
    must_link: Tuple[Pair, ...] = ()
    cannot_link: Tuple[Pair, ...] = ()

    @classmethod
    def build(cls, must_link: Iterable = (), cannot_link: Iterable = ()) -> "PairConstraints":
        return cls(tuple((int(i), int(j)) for i, j in must_link), tuple((int(i), int(j)) for i, j in cannot_link))

    @classmethod
    def from_labels(cls, y: np.ndarray) -> "PairConstraints":
        """Must-link within each class, cannot-link across classes (labeled rows are indices 0..l-1)."""
        must, cannot = [], []
        for i in range(len(y)):
            for j in range(i + 1, len(y)):
                (must if y[i] == y[j] else cannot).append((i, j))
        return cls(tuple(must), tuple(cannot))

    def merged(self, other: "PairConstraints") -> "PairConstraints":
        return PairConstraints(self.must_link + other.must_link, self.cannot_link + other.cannot_link)

    def check_range(self, n: int) -> None:
        for i, j in self.must_link + self.cannot_link:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidParameterError(f"constraint pair ({i}, {j}) out of range for {n} samples")

    def components(self, n: int) -> np.ndarray:
        """Must-link closure: component id per sample."""
        if not self.must_link:
            return np.arange(n)
        rows, cols = zip(*self.must_link)
        graph = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
        return labels

    def satisfied_by(self, assignments: np.ndarray) -> Optional[Pair]:
        """First violated pair, or None."""
        for i, j in self.must_link:
            if assignments[i] != assignments[j]:
                return i, j
        for i, j in self.cannot_link:
            if assignments[i] == assignments[j]:
                return i, j
        return None


@dataclass(frozen=True)
class ClusteringResult(FittedState):
    """Assignments of the training rows, centroids and the sum-of-squares objective."""
    assignments: np.ndarray
    centroids: np.ndarray
    objective: float
    n_iter: int = 0
    converged: bool = True
    objective_trace: Tuple[float, ...] = field(default_factory=tuple)
    restart: int = 0

    def decide(self, X: np.ndarray):
        """Nearest centroid; constraints only bind training rows."""
        return np.argmin(cdist(X, self.centroids, metric="sqeuclidean"), axis=1).astype(np.int64), None


def clustering_objective(X: np.ndarray, assignments: np.ndarray, centroids: np.ndarray) -> float:
    return float(np.sum((X - centroids[assignments]) ** 2))


def update_centroids(X: np.ndarray, assignments: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Means of the assigned rows; empty clusters are reseeded at the row farthest from its centroid."""
    k = centroids.shape[0]
    new = centroids.copy()
    counts = np.bincount(assignments, minlength=k)
    for c in np.flatnonzero(counts):
        new[c] = X[assignments == c].mean(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        distance = np.sum((X - new[assignments]) ** 2, axis=1)
        order = np.argsort(-distance, kind="stable")
        for c, row in zip(empty, order):
            new[c] = X[row]
    return new


def _cop_assign(
    X: np.ndarray,
    centroids: np.ndarray,
    groups: List[np.ndarray],
    conflicts: List[Set[int]]
) -> Optional[np.ndarray]:
    """One greedy pass; must-link groups are placed atomically in order of their first row."""
    assignments = np.full(X.shape[0], -1, dtype=np.int64)
    group_cluster = {}
    sq = cdist(X, centroids, metric="sqeuclidean")
    for g, members in enumerate(groups):
        cost = sq[members].sum(axis=0)
        blocked = {group_cluster[h] for h in conflicts[g] if h in group_cluster}
        best = None
        for c in np.argsort(cost, kind="stable"):
            if int(c) not in blocked:
                best = int(c)
                break
        if best is None:
            return None
        group_cluster[g] = best
        assignments[members] = best
    return assignments


def constrained_kmeans_fit(
    X: np.ndarray,
    k: int,
    constraints: Optional[PairConstraints] = None,
    max_iter: int = 300,
    restarts: int = 10,
    seed: int = 0,
    log: logging.Logger = logger
) -> ClusteringResult:
    """
    COP k-means over seeded restarts; the feasible restart with the lowest
    objective wins (ties to the lowest restart index).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    constraints = constraints or PairConstraints()
    constraints.check_range(n)

    component = constraints.components(n)
    for i, j in constraints.cannot_link:
        if component[i] == component[j]:
            raise InfeasibleConstraintsError("cannot-link inside a must-link component", pair=(i, j))
    first_rows = {}
    for row, c in enumerate(component):
        first_rows.setdefault(int(c), row)
    ordered = sorted(first_rows, key=first_rows.get)
    group_of = {c: g for g, c in enumerate(ordered)}
    groups = [np.flatnonzero(component == c) for c in ordered]
    conflicts: List[Set[int]] = [set() for _ in groups]
    for i, j in constraints.cannot_link:
        gi, gj = group_of[int(component[i])], group_of[int(component[j])]
        conflicts[gi].add(gj)
        conflicts[gj].add(gi)

    best: Optional[ClusteringResult] = None
    for r, stream in enumerate(SeededStream(seed).spawn(restarts)):
        result = _cop_run(X, X[np.sort(stream.choice(n, k))], groups, conflicts, max_iter, r)
        if result is None:
            log.debug(f"constrained_kmeans restart {r}: no feasible assignment")
            continue
        if best is None or result.objective < best.objective:
            best = result
    if best is None:
        raise InfeasibleConstraintsError(f"all {restarts} restarts hit a sample with no feasible centroid")
    violated = constraints.satisfied_by(best.assignments)
    if violated is not None:
        raise AlgorithmError(f"returned assignment violates constraint pair {violated}")
    log.info(f"constrained_kmeans: best objective {best.objective:.6g} from restart {best.restart}")
    return best


def _cop_run(X, centroids, groups, conflicts, max_iter, restart) -> Optional[ClusteringResult]:
    assignments = None
    objective = np.inf
    trace: List[float] = []
    converged = False
    n_iter = 0
    for _ in range(max_iter):
        proposal = _cop_assign(X, centroids, groups, conflicts)
        if proposal is None:
            return None
        if assignments is not None:
            if np.array_equal(proposal, assignments):
                converged = True
                break
            if clustering_objective(X, proposal, centroids) > objective:
                converged = True
                break
        assignments = proposal
        centroids = update_centroids(X, assignments, centroids)
        new_objective = clustering_objective(X, assignments, centroids)
        assert new_objective <= objective * (1 + 1e-12) + 1e-12, "k-means objective increased"
        objective = new_objective
        trace.append(objective)
        n_iter += 1
    return ClusteringResult(assignments=assignments, centroids=centroids, objective=objective, n_iter=n_iter,
                            converged=converged, objective_trace=tuple(trace), restart=restart)


def constrained_seed_kmeans_fit(
    d: SSLDataset,
    k: Optional[int] = None,
    clamp: bool = False,
    max_iter: int = 300,
    log: logging.Logger = logger
) -> ClusteringResult:
    """
    Seeded k-means over labeled and unlabeled rows.

    Centroids start at the per-class means of the labeled seeds. With clamp
    the seeds keep their class cluster on every pass; without it they only
    initialize.
    """
    n_classes = int(d.y.max()) + 1
    k = n_classes if k is None else k
    counts = np.bincount(d.y, minlength=k)
    if k != n_classes or np.any(counts == 0):
        raise DegenerateProblemError(
            f"missing class seeds: k={k} but seeded classes are {np.flatnonzero(counts).tolist()}"
        )
    X = d.X_all
    l = d.n_labeled
    centroids = np.vstack([d.X[d.y == c].mean(axis=0) for c in range(k)])
    assignments = None
    objective = np.inf
    trace: List[float] = []
    converged = False
    n_iter = 0
    for _ in range(max_iter):
        proposal = np.argmin(cdist(X, centroids, metric="sqeuclidean"), axis=1).astype(np.int64)
        if clamp:
            proposal[:l] = d.y
        if assignments is not None and np.array_equal(proposal, assignments):
            converged = True
            break
        assignments = proposal
        centroids = update_centroids(X, assignments, centroids)
        new_objective = clustering_objective(X, assignments, centroids)
        assert new_objective <= objective * (1 + 1e-12) + 1e-12, "k-means objective increased"
        objective = new_objective
        trace.append(objective)
        n_iter += 1
        log.debug(f"seeded k-means iteration {n_iter}: objective={objective:.6g}")
    return ClusteringResult(assignments=assignments, centroids=centroids, objective=objective, n_iter=n_iter,
                            converged=converged, objective_trace=tuple(trace))


class ConstrainedKMeansParams(ComponentParams):
    k: Optional[int] = Field(None, ge=1, description="Cluster count; defaults to the labeled class count")
    must_link: List[Tuple[int, int]] = Field(default_factory=list, description="Index pairs over labeled-then-unlabeled rows")
    cannot_link: List[Tuple[int, int]] = Field(default_factory=list, description="Index pairs over labeled-then-unlabeled rows")
    constraints_from_labels: bool = Field(False, description="Derive pairs from the labeled classes")
    max_iter: int = Field(300, ge=1, description="Maximum assignment passes per restart")
    restarts: int = Field(10, ge=1, description="Seeded restarts")


class SeedKMeansParams(ComponentParams):
    clamp: bool = Field(False, description="Keep labeled seeds in their class cluster")
    max_iter: int = Field(300, ge=1, description="Maximum assignment passes")


def _record(result: ClusteringResult, diagnostics: Dict[str, Any]) -> None:
    diagnostics.update({
        "objective": result.objective,
        "objective_trace": list(result.objective_trace),
        "n_iter": result.n_iter,
        "converged": result.converged,
        "assignments": result.assignments,
    })
    if not result.converged:
        diagnostics["warnings"].append(f"assignments still changing after {result.n_iter} iterations")


@register
class ConstrainedKMeans(Estimator):
    """COP k-means over labeled and unlabeled rows; predicts cluster ids."""
    name = "constrained_kmeans"
    task = TaskKind.CLUSTERING
    Params = ConstrainedKMeansParams
    outputs_classes = False

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> ClusteringResult:
        p = self.params
        constraints = PairConstraints.build(p.must_link, p.cannot_link)
        if p.constraints_from_labels:
            constraints = constraints.merged(PairConstraints.from_labels(dataset.y))
        k = p.k or int(dataset.y.max()) + 1
        result = constrained_kmeans_fit(dataset.X_all, k, constraints, p.max_iter, p.restarts, seed, self.logger)
        _record(result, diagnostics)
        diagnostics["restart"] = result.restart
        return result


@register
class ConstrainedSeedKMeans(Estimator):
    """Seeded k-means with one cluster per labeled class; predicts class labels."""
    name = "constrained_seed_kmeans"
    task = TaskKind.CLUSTERING
    Params = SeedKMeansParams

    def _fit(self, dataset, seed, diagnostics):
        result = constrained_seed_kmeans_fit(dataset, None, self.params.clamp, self.params.max_iter, self.logger)
        _record(result, diagnostics)
        diagnostics["transductive_labels"] = dataset.classes[result.assignments[dataset.n_labeled:]]
        return result
