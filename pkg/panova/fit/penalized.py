"""
Penalized linear regression
OLS, ridge, LASSO, adaptive LASSO, elastic net and adaptive elastic net.
Features are centred and scaled to unit norm internally; the objective on
that scale is

    ½‖y − Zb‖² + λ(α Σ_j w_j |b_j| + (1 − α)/2 ‖b‖²)

solved by cyclic coordinate descent with covariance updates (ridge uses
the normal equations). Coefficients are returned on the original scale.
File location: ./panova/fit/penalized.py
"""

# imports
from typing import List, NamedTuple, Optional

import numpy as np

from panova.config import FitConfig
from panova.errors import InvalidInputError, NumericalError
from panova.fit.dataset import fold_assignment
from panova.infrastructure.logging import ReplicateLogger
from panova.infrastructure.parallel import parallel_map, run_with_redraws
from panova.types import Dataset, FittedModel, PenaltyKind, PenaltySpec

ADAPTIVE_KINDS = (PenaltyKind.ALASSO, PenaltyKind.AENET)
MIN_GRID_MIXING = 1e-3
ADAPTIVE_FLOOR = 1e-10

# ──────────────────────────────────────────────────────────────────────────────
# Helper classes
# ──────────────────────────────────────────────────────────────────────────────


class Standardized(NamedTuple):
    """Centred, unit-norm design plus what is needed to undo the scaling"""

    Z: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    def to_original(self, b: np.ndarray) -> np.ndarray:
        slopes = b / self.x_scale
        return np.concatenate(([self.y_mean - self.x_mean @ slopes], slopes))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale


class LambdaSelection(NamedTuple):
    lambda_: float
    lambdas: np.ndarray
    cv_mean: np.ndarray
    cv_se: np.ndarray


def standardize(X: np.ndarray, y: np.ndarray) -> Standardized:
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    norms = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    # constant columns stay at zero and never enter the model
    scale = np.where(norms > 0.0, norms, np.inf)
    y_mean = float(y.mean())
    return Standardized(Z=Xc / scale, y=y - y_mean, x_mean=x_mean, x_scale=scale, y_mean=y_mean)


def penalized_objective(
    G: np.ndarray, c: np.ndarray, yy: float, b: np.ndarray, lam: float, alpha: float, w: np.ndarray
) -> float:
    """Objective value from the Gram form (yy = y'y)"""
    rss = yy - 2.0 * c @ b + b @ G @ b
    return 0.5 * rss + lam * (alpha * float(np.sum(w * np.abs(b))) + 0.5 * (1.0 - alpha) * float(b @ b))


def kkt_residual(G: np.ndarray, c: np.ndarray, b: np.ndarray, lam: float, alpha: float, w: np.ndarray) -> np.ndarray:
    """Per-coordinate violation of the optimality conditions"""
    grad = c - G @ b - lam * (1.0 - alpha) * b
    bound = lam * alpha * w
    active = b != 0.0
    residual = np.where(active, np.abs(grad - bound * np.sign(b)), np.maximum(np.abs(grad) - bound, 0.0))
    residual[np.diag(G) == 0.0] = 0.0
    return residual


# ──────────────────────────────────────────────────────────────────────────────
# Solvers
# ──────────────────────────────────────────────────────────────────────────────

def coordinate_descent(
    G: np.ndarray,
    c: np.ndarray,
    lam: float,
    alpha: float,
    w: np.ndarray,
    b0: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_sweeps: int = 10_000,
    objective_trace: Optional[List[float]] = None,
    yy: float = 0.0,
    kkt_tol: float = 1e-7,
) -> tuple[np.ndarray, int]:
    """
    Cyclic coordinate descent with soft-thresholding.

    Full sweeps alternate with sweeps over the current active set until the
    largest coefficient change of a full sweep is <= tol; the result must then
    meet the optimality conditions within kkt_tol per coordinate.

    Returns:
        (b, sweeps)

    Raises:
        NumericalError: no convergence within max_sweeps, or KKT residual above kkt_tol
    """
    p = c.shape[0]
    b = np.zeros(p) if b0 is None else np.array(b0, dtype=float)
    grad = c - G @ b
    diag = np.diag(G).copy()
    l1 = lam * alpha * w
    denom = diag + lam * (1.0 - alpha)
    sweeps = 0

    def sweep(indices: np.ndarray) -> float:
        max_delta = 0.0
        for j in indices:
            if diag[j] == 0.0:
                continue
            rho = grad[j] + diag[j] * b[j]
            shrunk = abs(rho) - l1[j]
            new = np.copysign(shrunk, rho) / denom[j] if shrunk > 0.0 else 0.0
            delta = new - b[j]
            if delta != 0.0:
                grad[:] -= G[:, j] * delta
                b[j] = new
                max_delta = max(max_delta, abs(delta))
        if objective_trace is not None:
            objective_trace.append(penalized_objective(G, c, yy, b, lam, alpha, w))
        return max_delta

    everything = np.arange(p)
    while sweeps < max_sweeps:
        sweeps += 1
        if sweep(everything) <= tol:
            residual = float(np.max(kkt_residual(G, c, b, lam, alpha, w), initial=0.0))
            if residual > kkt_tol:
                raise NumericalError(
                    f"coordinate descent KKT residual {residual:.3g} > {kkt_tol:g}",
                    trace=[{"sweeps": sweeps, "kkt_residual": residual, "lambda": lam}],
                )
            return b, sweeps
        active = np.flatnonzero(b)
        while sweeps < max_sweeps:
            sweeps += 1
            if sweep(active) <= tol:
                break
    raise NumericalError(f"coordinate descent did not converge in {max_sweeps} sweeps")


def ridge_solve(G: np.ndarray, c: np.ndarray, lam: float) -> np.ndarray:
    """b = (G + λI)⁻¹ c"""
    A = G + lam * np.eye(G.shape[0])
    try:
        return np.linalg.solve(A, c)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, c, rcond=None)[0]


def _ridge_path(G: np.ndarray, c: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(G)
    evals = np.clip(evals, 0.0, None)
    proj = evecs.T @ c
    return np.array([evecs @ (proj / (evals + lam)) for lam in lambdas])


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def fit_ols(d: Dataset, label: str = "ols") -> FittedModel:
    """Least squares with intercept; rejects designs without full column rank"""
    std = standardize(d.X, d.y)
    p = d.p
    if p == 0:
        return FittedModel(kind="ols", beta=[std.y_mean], support=(), n_obs=d.n, label=label)
    if p >= d.n or np.linalg.matrix_rank(d.X - std.x_mean) < p:
        raise NumericalError(f"OLS underdetermined: n={d.n}, p={p}, rank-deficient design")
    slopes = np.linalg.lstsq(d.X - std.x_mean, std.y, rcond=None)[0]
    beta = np.concatenate(([std.y_mean - std.x_mean @ slopes], slopes))
    return FittedModel(kind="ols", beta=beta, support=tuple(range(p)), n_obs=d.n, label=label)


def _penalty_weights(spec: PenaltySpec, p: int) -> np.ndarray:
    if spec.kind in ADAPTIVE_KINDS:
        if spec.adaptive_weights is None:
            raise InvalidInputError(f"{spec.kind.value} needs adaptive_weights")
    if spec.adaptive_weights is None:
        return np.ones(p)
    if len(spec.adaptive_weights) != p:
        raise InvalidInputError(f"adaptive_weights has length {len(spec.adaptive_weights)}, expected {p}")
    return np.array(spec.adaptive_weights, dtype=float)


def fit_penalized(d: Dataset, spec: PenaltySpec, config: Optional[FitConfig] = None) -> FittedModel:
    """Fit one penalized linear model at the spec's lambda"""
    config = config or FitConfig()
    label = spec.kind.value
    if spec.kind is PenaltyKind.OLS:
        return fit_ols(d, label)
    std = standardize(d.X, d.y)
    G = std.Z.T @ std.Z
    c = std.Z.T @ std.y
    sweeps = 0
    if spec.kind is PenaltyKind.RIDGE:
        b = ridge_solve(G, c, spec.lambda_)
        b[np.isinf(std.x_scale)] = 0.0
    else:
        w = _penalty_weights(spec, d.p)
        b, sweeps = coordinate_descent(
            G, c, spec.lambda_, spec.mixing(config.enet_alpha), w,
            tol=config.cd_tol, max_sweeps=config.cd_max_sweeps, kkt_tol=config.cd_kkt_tol,
        )
    return FittedModel(
        kind=label,
        beta=std.to_original(b),
        support=tuple(int(j) for j in np.flatnonzero(b)),
        n_obs=d.n,
        n_iter=sweeps,
        label=label,
    )


def lambda_grid(d: Dataset, spec: PenaltySpec, config: FitConfig) -> np.ndarray:
    """Decreasing log-spaced grid from the smallest lambda that zeroes every coefficient"""
    std = standardize(d.X, d.y)
    c = np.abs(std.Z.T @ std.y)
    alpha = max(spec.mixing(config.enet_alpha), MIN_GRID_MIXING)
    w = np.ones(d.p) if spec.adaptive_weights is None else np.array(spec.adaptive_weights)
    lam_max = float(np.max(c / (alpha * w))) if d.p else 1.0
    if lam_max <= 0.0:
        lam_max = 1.0
    ratio = config.lambda_min_ratio or (0.01 if d.n < d.p else 1e-4)
    return np.geomspace(lam_max, lam_max * ratio, config.lambda_grid_size)


def _path_coefficients(std: Standardized, spec: PenaltySpec, lambdas: np.ndarray, config: FitConfig) -> np.ndarray:
    G = std.Z.T @ std.Z
    c = std.Z.T @ std.y
    if spec.kind is PenaltyKind.RIDGE:
        return _ridge_path(G, c, lambdas)
    w = _penalty_weights(spec, G.shape[0])
    alpha = spec.mixing(config.enet_alpha)
    path = []
    b = None
    for lam in lambdas:
        b, _ = coordinate_descent(
            G, c, lam, alpha, w, b0=b, tol=config.cd_tol, max_sweeps=config.cd_max_sweeps, kkt_tol=config.cd_kkt_tol
        )
        path.append(b.copy())
    return np.array(path)


def select_lambda(d: Dataset, spec: PenaltySpec, config: FitConfig, seed: int) -> LambdaSelection:
    """K-fold CV over the lambda grid; minimum-CV rule unless one_se_rule is set"""
    lambdas = lambda_grid(d, spec, config)
    labels = fold_assignment(d.n, config.cv_folds, seed)
    sq_err = np.empty((lambdas.size, d.n))
    fold_means = []
    for f in range(config.cv_folds):
        test = labels == f
        std = standardize(d.X[~test], d.y[~test])
        path = _path_coefficients(std, spec, lambdas, config)
        pred = std.y_mean + std.transform(d.X[test]) @ path.T
        err = (pred - d.y[test][:, None]) ** 2
        sq_err[:, test] = err.T
        fold_means.append(err.mean(axis=0))
    cv_mean = sq_err.mean(axis=1)
    cv_se = np.std(np.array(fold_means), axis=0, ddof=1) / np.sqrt(config.cv_folds)
    best = int(np.argmin(cv_mean))
    if config.one_se_rule:
        best = int(np.flatnonzero(cv_mean <= cv_mean[best] + cv_se[best])[0])
    return LambdaSelection(float(lambdas[best]), lambdas, cv_mean, cv_se)


def adaptive_weights(d: Dataset, config: FitConfig, seed: int) -> tuple[float, ...]:
    """1/|b_ridge|^γ on the standardized scale, with ridge lambda chosen by CV"""
    ridge = PenaltySpec(kind=PenaltyKind.RIDGE)
    lam = select_lambda(d, ridge, config, seed).lambda_
    std = standardize(d.X, d.y)
    b = ridge_solve(std.Z.T @ std.Z, std.Z.T @ std.y, lam)
    magnitude = np.maximum(np.abs(b), ADAPTIVE_FLOOR)
    return tuple((1.0 / magnitude**config.adaptive_exponent).tolist())


def tune_penalty(
    d: Dataset,
    kind: PenaltyKind,
    config: Optional[FitConfig] = None,
    seed: int = 0,
    alpha: Optional[float] = None,
) -> PenaltySpec:
    """Complete a penalty: adaptive weights (when needed) and the CV-selected lambda"""
    config = config or FitConfig()
    spec = PenaltySpec(kind=kind, alpha=alpha)
    if kind is PenaltyKind.OLS:
        return spec
    if kind in ADAPTIVE_KINDS:
        spec = spec.model_copy(update={"adaptive_weights": adaptive_weights(d, config, seed)})
    return spec.with_lambda(select_lambda(d, spec, config, seed).lambda_)


def estimate_sigma2(d: Dataset, m: FittedModel, support: Optional[tuple[int, ...]] = None) -> float:
    """
    Residual variance of an OLS refit on the selected variables.

    Args:
        d: training data
        m: fitted model whose support is used
        support: override (ridge borrows the elastic-net support)
    """
    chosen = list(m.support if support is None else support)
    k = len(chosen)
    if k >= d.n - 1:
        raise NumericalError(f"saturated support: {k} variables with n={d.n}")
    design = np.column_stack([np.ones(d.n), d.X[:, chosen]])
    coef = np.linalg.lstsq(design, d.y, rcond=None)[0]
    resid = d.y - design @ coef
    return float(resid @ resid) / (d.n - k - 1)


def bootstrap_pred_variance(
    d: Dataset,
    spec: PenaltySpec,
    x_new: np.ndarray,
    B: int,
    seed: int,
    config: Optional[FitConfig] = None,
    n_jobs: int = 1,
    logger: Optional[ReplicateLogger] = None,
) -> float:
    """Variance of predict(x_new) across B case-resampled refits at a fixed penalty"""
    config = config or FitConfig()
    if B < 50:
        raise InvalidInputError(f"bootstrap needs B >= 50, got {B}")
    x_new = np.asarray(x_new, dtype=float)

    def draw(rng: np.random.Generator) -> float:
        rows = rng.integers(0, d.n, size=d.n)
        if np.unique(rows).size < 2:
            raise InvalidInputError("degenerate resample")
        return fit_penalized(d.take(rows), spec, config).predict(x_new)

    def replicate(index: int) -> float:
        return run_with_redraws(draw, seed, index, config.max_redraws, logger)

    values = parallel_map(replicate, range(B), n_jobs=n_jobs)
    return float(np.var(values, ddof=1))
