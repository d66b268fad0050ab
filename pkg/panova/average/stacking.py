"""
Stacking weights
Minimizes the squared error of a convex combination of out-of-fold
predictions, ‖y − P w‖² over the probability simplex. Projected gradient
descent from the uniform point finds the support; a primal active-set pass
then solves the problem exactly on that support and the result is checked
against the KKT conditions.
File location: ./panova/average/stacking.py
"""

# imports
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from panova.config import AveragingConfig
from panova.errors import InvalidInputError, NumericalError
from panova.types import WeightVector


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, Σw = 1} (sort-and-threshold)"""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ranks = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u * ranks > css - 1.0)[-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def stacking_objective(P: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    r = y - P @ w
    return float(r @ r)


def _curvature_scale(H: np.ndarray) -> float:
    return max(float(np.max(np.abs(np.diag(H)))), np.finfo(float).tiny)


def stacking_kkt_residual(P: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    """
    Complementarity residual max_j w_j (g_j − min g), with g the gradient
    scaled by the largest curvature so the value is unit-free.
    """
    H = P.T @ P
    g = 2.0 * (H @ w - P.T @ y) / _curvature_scale(H)
    return float(np.max(w * (g - g.min())))


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _projected_gradient(H: np.ndarray, b: np.ndarray, P: np.ndarray, y: np.ndarray, config: AveragingConfig) -> Tuple[np.ndarray, int]:
    q = H.shape[0]
    w = np.full(q, 1.0 / q)
    lipschitz = 2.0 * float(linalg.eigh(H, eigvals_only=True)[-1])
    if lipschitz <= 0.0:
        return w, 0
    step = 1.0 / lipschitz
    objective = stacking_objective(P, y, w)
    iterations = 0
    for iterations in range(1, config.qp_max_iter + 1):
        grad = 2.0 * (H @ w - b)
        candidate = project_simplex(w - step * grad)
        cand_obj = stacking_objective(P, y, candidate)
        # backtrack only if rounding pushed the objective up
        while cand_obj > objective + 1e-15 * max(1.0, objective) and step > 1e-20:
            step /= 2.0
            candidate = project_simplex(w - step * grad)
            cand_obj = stacking_objective(P, y, candidate)
        converged = float(np.max(np.abs(candidate - w))) <= config.qp_tol
        w, objective = candidate, cand_obj
        if converged:
            break
    return w, iterations


def _equality_solution(Hs: np.ndarray, bs: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Minimizer over {Σw = 1, w_j = 0 off the support}; minimum-norm when the block is singular"""
    idx = np.flatnonzero(support)
    k = idx.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * Hs[np.ix_(idx, idx)]
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([2.0 * bs[idx], [1.0]])
    solution = linalg.lstsq(kkt, rhs, cond=1e-13)[0]
    target = np.zeros(Hs.shape[0])
    target[idx] = solution[:k]
    return target


def _polish(Hs: np.ndarray, bs: np.ndarray, w: np.ndarray, max_steps: int) -> Tuple[np.ndarray, int]:
    """
    Primal active-set refinement of a feasible point.

    Solves the equality-constrained problem on the current support, walks
    back to the simplex when that solution leaves it (dropping the blocking
    index) and otherwise adds the inactive index with the most negative
    gradient, until no inactive index improves the objective.
    """
    w = w.copy()
    support = w > 0.0
    steps = 0
    for steps in range(1, max_steps + 1):
        target = _equality_solution(Hs, bs, support)
        negative = support & (target < 0.0)
        if np.any(negative):
            idx = np.flatnonzero(negative)
            ratios = w[idx] / (w[idx] - target[idx])
            w = w + float(ratios.min()) * (target - w)
            support[idx[np.argmin(ratios)]] = False
            support &= w > 1e-15
            w[~support] = 0.0
            w /= w.sum()
            continue
        w = np.where(support, target, 0.0)
        inactive = np.flatnonzero(~support)
        if inactive.size == 0:
            break
        g = 2.0 * (Hs @ w - bs)
        nu = float(np.mean(g[support]))
        j = inactive[np.argmin(g[inactive])]
        if g[j] >= nu - 1e-14:
            break
        support[j] = True
    w = np.maximum(w, 0.0)
    return w / w.sum(), steps


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def stacking_weights(
    P: np.ndarray,
    y: np.ndarray,
    config: Optional[AveragingConfig] = None,
    labels: Optional[Sequence[str]] = None,
) -> WeightVector:
    """
    Stacking weights for an n×q matrix of out-of-fold predictions.

    Exchangeable columns keep equal weights: the gradient phase starts at the
    uniform point and the exact solve on the support takes the minimum-norm
    solution (two identical columns give 0.5/0.5).

    Raises:
        InvalidInputError: shape mismatch or non-finite entries
        NumericalError: the KKT residual exceeds config.kkt_tol
    """
    config = config or AveragingConfig()
    P = np.asarray(P, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if P.ndim != 2 or P.shape[1] == 0:
        raise InvalidInputError("stacking needs at least one prediction column")
    if P.shape[0] != y.shape[0]:
        raise InvalidInputError("prediction rows and response length differ")
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(y))):
        raise InvalidInputError("non-finite predictions")
    q = P.shape[1]
    names = tuple(labels) if labels is not None else None
    if q == 1:
        return WeightVector(weights=(1.0,), method="stacking", labels=names, objective=stacking_objective(P, y, np.ones(1)))

    H = P.T @ P
    b = P.T @ y
    w, iterations = _projected_gradient(H, b, P, y, config)
    scale = _curvature_scale(H)
    w, steps = _polish(H / scale, b / scale, w, max_steps=10 * q + 50)

    residual = stacking_kkt_residual(P, y, w)
    if not residual <= config.kkt_tol:
        raise NumericalError(
            f"stacking weights did not converge: KKT residual {residual:.3g} > {config.kkt_tol:g}",
            trace=[{"iterations": iterations, "active_set_steps": steps, "kkt_residual": residual}],
        )
    return WeightVector(
        weights=tuple(w.tolist()),
        method="stacking",
        labels=names,
        objective=stacking_objective(P, y, w),
        iterations=iterations + steps,
    )
