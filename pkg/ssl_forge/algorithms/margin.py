"""
Margin-based learners: a linear SVM solved by pairwise dual coordinate
descent, the label-switching transductive SVM built on it, and the Laplacian
SVM with a squared-hinge primal solved by Newton or gradient steps under a
halving line search.

Binary problems only; dense class 0 maps to -1 and class 1 to +1. The bias
is not regularized.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import Field
from scipy.linalg import LinAlgError, lstsq, solve
from scipy.spatial.distance import cdist

from ssl_forge.algorithms.graph import build_knn_graph, normalized_affinity, rbf_kernel
from ssl_forge.core.dataset import SSLDataset, argmax_lowest
from ssl_forge.core.estimator import Estimator, ScoreState
from ssl_forge.core.exceptions import ConvergenceError, DataValidationError, InvalidParameterError
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register


logger = logging.getLogger(__name__)


def _signed(y: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(y) > 0, 1.0, -1.0)


def _binary_scores(f: np.ndarray) -> np.ndarray:
    """Two-column scores (-f, f); f == 0 ties to class 0."""
    return np.column_stack([-f, f])


def require_binary(d: SSLDataset, algorithm: str) -> None:
    if d.n_classes != 2:
        raise DataValidationError(
            f"{algorithm} is binary only (got {d.n_classes} classes); wrap with one-vs-rest out of scope"
        )


@dataclass(frozen=True)
class LinearSvmModel(ScoreState):
    """f(x) = w.x + b with the dual coefficients that produced it."""
    w: np.ndarray
    b: float
    alpha: np.ndarray
    C: np.ndarray
    n_sweeps: int = 0
    converged: bool = True
    objective_trace: Tuple[float, ...] = field(default_factory=tuple)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.w + self.b

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        return _binary_scores(self.decision_function(X))


def svm_primal_objective(w: np.ndarray, b: float, X: np.ndarray, y_signed: np.ndarray, C: np.ndarray) -> float:
    """(1/2)||w||^2 + sum_i C_i max(0, 1 - y_i f(x_i))."""
    slack = np.maximum(0.0, 1.0 - y_signed * (X @ w + b))
    return float(0.5 * (w @ w) + C @ slack)


def svm_dual_objective(alpha: np.ndarray, w: np.ndarray) -> float:
    """sum_i alpha_i - (1/2)||w||^2 with w = sum_i alpha_i y_i x_i."""
    return float(alpha.sum() - 0.5 * (w @ w))


def optimal_bias(margins: np.ndarray, y_signed: np.ndarray, C: np.ndarray) -> float:
    """
    Exact minimizer over b of sum_i C_i max(0, 1 - y_i (margins_i + b)).

    The cost is convex and piecewise linear with breakpoints y_i - margins_i;
    a flat minimum returns the midpoint of its breakpoint interval.
    """
    F = y_signed - margins
    B = np.unique(F)
    pos, neg = y_signed > 0, y_signed < 0
    order_p = np.argsort(F[pos], kind="stable")
    Fp, Cp = F[pos][order_p], C[pos][order_p]
    order_n = np.argsort(F[neg], kind="stable")
    Fn, Cn = F[neg][order_n], C[neg][order_n]
    cp = np.concatenate([[0.0], np.cumsum(Cp)])
    cpf = np.concatenate([[0.0], np.cumsum(Cp * Fp)])
    cn = np.concatenate([[0.0], np.cumsum(Cn)])
    cnf = np.concatenate([[0.0], np.cumsum(Cn * Fn)])
    ip = np.searchsorted(Fp, B, side="right")
    i_n = np.searchsorted(Fn, B, side="left")
    cost = (cpf[-1] - cpf[ip]) - B * (cp[-1] - cp[ip]) + B * cn[i_n] - cnf[i_n]
    lowest = float(cost.min())
    near = np.flatnonzero(cost <= lowest + 1e-10 * max(abs(lowest), float(C.max())))
    return float(0.5 * (B[near[0]] + B[near[-1]]))


def _working_sets(alpha: np.ndarray, y: np.ndarray, C: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rows whose alpha_i may move by +y_i (up) and by -y_i (low)."""
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    return up, low


def _max_violation(F: np.ndarray, up: np.ndarray, low: np.ndarray) -> float:
    if not (np.any(up) and np.any(low)):
        return 0.0
    return float(np.max(F[up]) - np.min(F[low]))


def _pair_for(i: int, F: np.ndarray, up: np.ndarray, low: np.ndarray, tol: float) -> Optional[Tuple[int, int]]:
    """The most violating (up, low) pair containing row i, if its gap exceeds tol."""
    best, pair = tol, None
    others = np.arange(len(F)) != i
    if up[i] and np.any(low & others):
        j = int(np.argmin(np.where(low & others, F, np.inf)))
        if F[i] - F[j] > best:
            best, pair = F[i] - F[j], (i, j)
    if low[i] and np.any(up & others):
        j = int(np.argmax(np.where(up & others, F, -np.inf)))
        if F[j] - F[i] > best:
            pair = (j, i)
    return pair


def linear_svm_fit(
    X: np.ndarray,
    y_signed: np.ndarray,
    C: np.ndarray,
    max_sweeps: int = 1000,
    tol: float = 1e-6,
    log: logging.Logger = logger
) -> LinearSvmModel:
    """
    Hinge-loss SVM with an unregularized bias by pairwise dual coordinate descent.

    Each sweep visits rows in index order and moves the most violating pair
    containing the row, which keeps sum_i alpha_i y_i = 0 and every alpha_i
    in [0, C_i]. After a sweep the bias is the exact minimizer for the current
    w. The returned point is the best primal iterate, so objective_trace is
    non-increasing. The loop stops when the largest pair violation is below tol.
    """
    y = _signed(y_signed)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataValidationError("linear SVM needs both labels present")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    C = np.broadcast_to(np.asarray(C, dtype=np.float64), y.shape).copy()
    alpha = np.zeros(n)
    w = np.zeros(X.shape[1])
    F = y.copy()
    best_objective, best = np.inf, (w.copy(), 0.0, alpha.copy())
    trace = []
    converged = False
    violation = np.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for i in range(n):
            up, low = _working_sets(alpha, y, C)
            pair = _pair_for(i, F, up, low, tol)
            if pair is None:
                continue
            u, v = pair
            diff = X[u] - X[v]
            curvature = float(diff @ diff)
            room_u = C[u] - alpha[u] if y[u] > 0 else alpha[u]
            room_v = alpha[v] if y[v] > 0 else C[v] - alpha[v]
            room = min(room_u, room_v)
            t = room if curvature <= 1e-12 else min((F[u] - F[v]) / curvature, room)
            alpha[u] = (C[u] if y[u] > 0 else 0.0) if t >= room_u else alpha[u] + y[u] * t
            alpha[v] = (0.0 if y[v] > 0 else C[v]) if t >= room_v else alpha[v] - y[v] * t
            w += t * diff
            F -= t * (X @ diff)
        up, low = _working_sets(alpha, y, C)
        violation = _max_violation(F, up, low)
        b = optimal_bias(X @ w, y, C)
        objective = svm_primal_objective(w, b, X, y, C)
        if objective < best_objective:
            best_objective, best = objective, (w.copy(), b, alpha.copy())
        trace.append(best_objective)
        log.debug(f"linear SVM sweep {sweeps}: objective {objective:.6g}, violation {violation:.3e}")
        if violation < tol:
            converged = True
            break
    if not converged:
        log.warning(f"linear SVM reached max_sweeps={max_sweeps} (violation {violation:.3e})")
    w_best, b_best, alpha_best = best
    return LinearSvmModel(w=w_best, b=float(b_best), alpha=alpha_best, C=C,
                          n_sweeps=sweeps, converged=converged, objective_trace=tuple(trace))


@dataclass
class SwapRecord:
    """Objective before and after one pseudo-label swap (same w, b)."""
    positive_index: int
    negative_index: int
    objective_before: float
    objective_after: float
    cost: float


def tsvm_fit(
    d: SSLDataset,
    C_l: float = 1.0,
    C_u: float = 0.1,
    pos_fraction: Optional[float] = None,
    max_sweeps: int = 1000,
    tol: float = 1e-6,
    max_swaps: int = 10000,
    log: logging.Logger = logger
) -> Tuple[LinearSvmModel, np.ndarray, List[SwapRecord]]:
    """
    Label-switching transductive SVM.

    Pseudo-labels start from the supervised SVM with the highest decision
    values marked positive, round(pos_fraction * u) of them. The unlabeled
    cost grows from max(1e-5, 1e-5 * C_u) by doubling up to C_u; at every
    cost the pair of opposite-signed pseudo-labels with the largest slack sum
    is swapped while both slacks are positive and sum above 2. Each swap must
    strictly lower the objective at the current (w, b).
    """
    require_binary(d, "tsvm")
    if d.n_unlabeled == 0:
        raise DataValidationError("tsvm needs unlabeled data")
    X_l, X_u = d.X, d.unlabeled_X
    y_l = _signed(d.y)
    l, u = len(y_l), X_u.shape[0]
    supervised = linear_svm_fit(X_l, y_l, np.full(l, C_l), max_sweeps, tol, log)

    fraction = float(np.mean(y_l > 0)) if pos_fraction is None else pos_fraction
    n_pos = int(np.floor(fraction * u + 0.5))
    order = np.argsort(-supervised.decision_function(X_u), kind="stable")
    y_u = -np.ones(u)
    y_u[order[:n_pos]] = 1.0

    X_all = np.vstack([X_l, X_u])
    cost_u = min(max(1e-5, 1e-5 * C_u), C_u)
    swaps: List[SwapRecord] = []
    while True:
        costs = np.concatenate([np.full(l, C_l), np.full(u, cost_u)])
        labels = np.concatenate([y_l, y_u])
        model = _fit_mixed(X_all, labels, costs, max_sweeps, tol, log)
        for _ in range(max_swaps):
            slack = np.maximum(0.0, 1.0 - y_u * model.decision_function(X_u))
            pair = _swap_candidate(y_u, slack)
            if pair is None:
                break
            i, j = pair
            before = svm_primal_objective(model.w, model.b, X_all, labels, costs)
            y_u[i], y_u[j] = -y_u[i], -y_u[j]
            labels = np.concatenate([y_l, y_u])
            after = svm_primal_objective(model.w, model.b, X_all, labels, costs)
            if not after < before:
                raise ConvergenceError(
                    f"swap of unlabeled {i} and {j} did not lower the objective ({before:.6g} -> {after:.6g})"
                )
            swaps.append(SwapRecord(int(i), int(j), before, after, cost_u))
            log.debug(f"tsvm swap ({i}, {j}) at C*_u={cost_u:.3g}: objective {before:.6g} -> {after:.6g}")
            model = _fit_mixed(X_all, labels, costs, max_sweeps, tol, log)
        if cost_u >= C_u:
            break
        cost_u = min(2.0 * cost_u, C_u)
    log.info(f"tsvm finished with {len(swaps)} swaps, {int(np.sum(y_u > 0))}/{u} pseudo-positives")
    return model, y_u, swaps


def _fit_mixed(X, labels, costs, max_sweeps, tol, log) -> LinearSvmModel:
    if np.all(labels > 0) or np.all(labels < 0):
        raise DataValidationError("tsvm pseudo-labels collapsed to one class")
    return linear_svm_fit(X, labels, costs, max_sweeps, tol, log)


def _swap_candidate(y_u: np.ndarray, slack: np.ndarray) -> Optional[Tuple[int, int]]:
    positive = np.flatnonzero((y_u > 0) & (slack > 0))
    negative = np.flatnonzero((y_u < 0) & (slack > 0))
    if positive.size == 0 or negative.size == 0:
        return None
    i = positive[int(np.argmax(slack[positive]))]
    j = negative[int(np.argmax(slack[negative]))]
    if slack[i] + slack[j] <= 2.0:
        return None
    return int(i), int(j)


def neighborhood_gamma(X_all: np.ndarray, k: int) -> float:
    """rbf width 1 / (2 * mean squared distance to the k nearest neighbors), 1.0 when that is zero."""
    n = X_all.shape[0]
    if n < 2:
        return 1.0
    sq = cdist(X_all, X_all, metric="sqeuclidean")
    np.fill_diagonal(sq, np.inf)
    nearest = np.sort(sq, axis=1)[:, :min(k, n - 1)]
    spread = float(np.mean(nearest))
    return 1.0 / (2.0 * spread) if spread > 0 else 1.0


@dataclass(frozen=True)
class KernelModel(ScoreState):
    """f(x) = sum_i alpha_i K(x_i, x) + b with an rbf kernel over the training rows."""
    X_train: np.ndarray
    alpha: np.ndarray
    b: float
    gamma: float

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return rbf_kernel(X, self.X_train, self.gamma) @ self.alpha + self.b

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        return _binary_scores(self.decision_function(X))


def lapsvm_objective(
    alpha: np.ndarray,
    b: float,
    K: np.ndarray,
    L: np.ndarray,
    y_signed: np.ndarray,
    gamma_A: float,
    gamma_I: float
) -> Tuple[float, np.ndarray, float]:
    """
    J = (1/l) sum_labeled max(0, 1 - y_i f_i)^2 + gamma_A a'Ka + gamma_I (Ka)' L (Ka)
    with f = Ka + b over all n points (labeled first). Returns (J, dJ/da, dJ/db).
    """
    n = K.shape[0]
    l = len(y_signed)
    Ka = K @ alpha
    f = Ka + b
    slack = np.maximum(0.0, 1.0 - y_signed * f[:l])
    LKa = L @ Ka
    J = slack @ slack / l + gamma_A * alpha @ Ka + gamma_I * Ka @ LKa
    g_f = np.zeros(n)
    g_f[:l] = -2.0 / l * y_signed * slack
    grad_alpha = K @ g_f + 2.0 * gamma_A * Ka + 2.0 * gamma_I * (K @ LKa)
    return float(J), grad_alpha, float(g_f.sum())


def lapsvm_newton_target(
    alpha: np.ndarray,
    b: float,
    K: np.ndarray,
    L: np.ndarray,
    y_signed: np.ndarray,
    gamma_A: float,
    gamma_I: float,
    fit_intercept: bool = True
) -> Tuple[np.ndarray, float]:
    """
    Minimizer of J with the labeled rows currently inside the margin treated
    as squared-error terms and the rest dropped.

    Solves (E K + l gamma_A I + l gamma_I L K) a + E 1 b = E y together with
    1'E (K a + b - y) = 0, where E selects the active labeled rows.
    """
    n = K.shape[0]
    l = len(y_signed)
    f = K @ alpha + b
    active = np.zeros(n)
    active[:l] = (y_signed * f[:l] < 1.0).astype(np.float64)
    target = np.zeros(n)
    target[:l] = y_signed
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = active[:, None] * K + l * gamma_A * np.eye(n) + l * gamma_I * (L @ K)
    A[:n, n] = active
    rhs = np.zeros(n + 1)
    rhs[:n] = active * target
    if fit_intercept and active.sum() > 0:
        A[n, :n] = active @ K
        A[n, n] = active.sum()
        rhs[n] = active @ target
    else:
        A[n, n] = 1.0
        rhs[n] = b
    try:
        solution = solve(A, rhs)
    except LinAlgError:
        solution = lstsq(A, rhs)[0]
    return solution[:n], float(solution[n])


def lapsvm_fit(
    d: SSLDataset,
    gamma_A: float = 1e-5,
    gamma_I: float = 1.0,
    gamma: Optional[float] = None,
    k: int = 7,
    iters: int = 500,
    fit_intercept: bool = True,
    solver: str = "newton",
    step: float = 1.0,
    log: logging.Logger = logger
) -> Tuple[KernelModel, List[float]]:
    """
    Laplacian SVM on the symmetric-normalized Laplacian of the kNN graph.

    Each iteration moves along a descent direction, the Newton direction
    toward `lapsvm_newton_target` or the negative gradient, and halves the
    step while it would increase J (or make it non-finite). Gradient steps
    double the next trial step after acceptance. Returns the model and the
    trace of J over accepted steps.
    """
    require_binary(d, "lapsvm")
    if solver not in ("newton", "gradient"):
        raise InvalidParameterError(f"unknown lapsvm solver {solver!r}")
    X_all = d.X_all
    n = X_all.shape[0]
    gamma = neighborhood_gamma(X_all, k) if gamma is None else gamma
    K = rbf_kernel(X_all, X_all, gamma)
    graph = build_knn_graph(X_all, min(k, n - 1), "rbf", gamma, d.n_labeled) if n > 1 else None
    L = np.eye(n) - normalized_affinity(graph).toarray() if graph is not None else np.zeros((n, n))
    y_signed = _signed(d.y)

    alpha = np.zeros(n)
    b = 0.0
    J, g_alpha, g_b = lapsvm_objective(alpha, b, K, L, y_signed, gamma_A, gamma_I)
    trace = [J]
    for it in range(iters):
        if solver == "newton":
            target_alpha, target_b = lapsvm_newton_target(alpha, b, K, L, y_signed, gamma_A, gamma_I, fit_intercept)
            d_alpha, d_b = target_alpha - alpha, target_b - b
            trial = 1.0
        else:
            d_alpha, d_b = -g_alpha, (-g_b if fit_intercept else 0.0)
            trial = step
        accepted = False
        while trial > 1e-14:
            new_alpha = alpha + trial * d_alpha
            new_b = b + trial * d_b
            new_J, new_g_alpha, new_g_b = lapsvm_objective(new_alpha, new_b, K, L, y_signed, gamma_A, gamma_I)
            if np.isfinite(new_J) and new_J <= J:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            if not np.isfinite(J):
                raise ConvergenceError(f"lapsvm objective is non-finite at iteration {it}")
            log.debug(f"lapsvm: no descent step at iteration {it}; stopping")
            break
        improvement = J - new_J
        alpha, b, J, g_alpha, g_b = new_alpha, new_b, new_J, new_g_alpha, new_g_b
        trace.append(J)
        if solver == "newton":
            if improvement <= 1e-12 * max(1.0, abs(J)):
                break
        else:
            step = min(trial * 2.0, 1e6)
    log.info(f"lapsvm finished after {len(trace) - 1} {solver} steps, objective {J:.6g}")
    return KernelModel(X_train=X_all, alpha=alpha, b=b, gamma=gamma), trace


class LinearSvmParams(ComponentParams):
    C: float = Field(1.0, gt=0.0, description="Hinge-loss cost of every sample")
    max_sweeps: int = Field(1000, ge=1, description="Maximum coordinate-descent sweeps")
    tol: float = Field(1e-6, gt=0.0, description="Pair-violation tolerance")


class TsvmParams(ComponentParams):
    C_l: float = Field(1.0, gt=0.0, description="Cost of labeled samples")
    C_u: float = Field(0.1, gt=0.0, description="Final cost of unlabeled samples")
    pos_fraction: Optional[float] = Field(None, ge=0.0, le=1.0, description="Fraction of unlabeled samples labeled positive")
    max_sweeps: int = Field(1000, ge=1, description="Maximum sweeps of each inner SVM solve")
    tol: float = Field(1e-6, gt=0.0, description="Inner solver tolerance")


class LapSvmParams(ComponentParams):
    gamma_A: float = Field(1e-5, ge=0.0, description="Ambient (RKHS) regularization")
    gamma_I: float = Field(1.0, ge=0.0, description="Intrinsic (graph) regularization")
    gamma: Optional[float] = Field(None, gt=0.0, description="rbf width of kernel and graph; kNN-scale default when omitted")
    k: int = Field(7, ge=1, description="Neighbors in the Laplacian graph")
    iters: int = Field(500, ge=0, description="Maximum descent steps")
    fit_intercept: bool = Field(True, description="Learn the bias b")
    solver: Literal["newton", "gradient"] = Field("newton", description="Descent direction")


@register
class LinearSvm(Estimator):
    """Supervised linear SVM on the labeled rows."""
    name = "linear_svm"
    Params = LinearSvmParams

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> LinearSvmModel:
        require_binary(dataset, self.name)
        p = self.params
        model = linear_svm_fit(dataset.X, _signed(dataset.y), np.full(dataset.n_labeled, p.C),
                               p.max_sweeps, p.tol, self.logger)
        diagnostics.update({"n_iter": model.n_sweeps, "converged": model.converged,
                            "objective": model.objective_trace[-1]})
        return model


@register
class TSVM(Estimator):
    """Transductive SVM by pseudo-label switching."""
    name = "tsvm"
    Params = TsvmParams

    def _fit(self, dataset, seed, diagnostics):
        p = self.params
        model, y_u, swaps = tsvm_fit(dataset, p.C_l, p.C_u, p.pos_fraction, p.max_sweeps, p.tol, log=self.logger)
        diagnostics.update({
            "n_swaps": len(swaps),
            "swap_objectives": [(s.objective_before, s.objective_after) for s in swaps],
            "converged": model.converged,
            "transductive_labels": dataset.classes[(y_u > 0).astype(np.int64)],
        })
        return model


@register
class LapSVM(Estimator):
    """Laplacian SVM (manifold-regularized kernel squared-hinge classifier)."""
    name = "lapsvm"
    Params = LapSvmParams

    def _fit(self, dataset, seed, diagnostics):
        p = self.params
        model, trace = lapsvm_fit(dataset, p.gamma_A, p.gamma_I, p.gamma, p.k, p.iters, p.fit_intercept,
                                  p.solver, log=self.logger)
        labels = argmax_lowest(model.class_scores(dataset.unlabeled_X)) if dataset.n_unlabeled else np.zeros(0, dtype=np.int64)
        diagnostics.update({
            "n_iter": len(trace) - 1,
            "objective": trace[-1],
            "transductive_labels": dataset.classes[labels],
        })
        return model
