"""
Binomial GLMs by iteratively reweighted least squares
Logit, probit and complementary log-log links over any subset of the
columns of X (the empty subset is the intercept-only "no effect" model).
File location: ./panova/fit/glm.py
"""

# imports
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from panova.config import FitConfig
from panova.errors import InvalidInputError, NumericalError
from panova.fit.links import inverse_link, link_function, mu_eta
from panova.infrastructure.logging import FitLogger
from panova.types import Dataset, FittedModel, Link

MAX_STEP_HALVINGS = 30

# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────


def _check_binomial(d: Dataset) -> np.ndarray:
    if d.trials is None:
        raise InvalidInputError("binomial GLM needs a dataset with trials")
    return d.trials


def _clamped_mean(link: Link, eta: np.ndarray, config: FitConfig) -> np.ndarray:
    mu = inverse_link(link, eta)
    return np.clip(mu, config.prob_clamp, 1.0 - config.prob_clamp)


def binomial_loglik(y: np.ndarray, trials: np.ndarray, mu: np.ndarray) -> float:
    """Σ log Binomial(y_i; n_i, μ_i), including the binomial coefficients"""
    return float(np.sum(stats.binom.logpmf(y, trials, mu)))


def _objective(y: np.ndarray, trials: np.ndarray, mu: np.ndarray, penalty: np.ndarray, coef: np.ndarray) -> float:
    """Half deviance plus the ridge term; its negative gradient is the penalized score"""
    return 0.5 * binomial_deviance(y, trials, mu) + 0.5 * float(np.sum(penalty * coef * coef))


def binomial_deviance(y: np.ndarray, trials: np.ndarray, mu: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        fitted = trials * mu
        t1 = np.where(y > 0, y * np.log(y / fitted), 0.0)
        t2 = np.where(trials - y > 0, (trials - y) * np.log((trials - y) / (trials - fitted)), 0.0)
    return float(2.0 * np.sum(t1 + t2))


def _full_beta(p: int, variables: Sequence[int], coef: np.ndarray) -> np.ndarray:
    beta = np.zeros(p + 1)
    beta[0] = coef[0]
    beta[1 + np.asarray(variables, dtype=int)] = coef[1:]
    return beta


def _model_label(link: Link, variables: Sequence[int], names: Sequence[str]) -> str:
    inner = ",".join(names[j] for j in variables) if variables else "1"
    return f"{link.value}({inner})"


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def _irls(
    Z: np.ndarray,
    y: np.ndarray,
    trials: np.ndarray,
    link: Link,
    config: FitConfig,
    ridge: float = 0.0,
    strict: bool = True,
) -> Dict[str, Any]:
    """
    Newton/Fisher scoring for the (optionally ridge-penalized) binomial likelihood.

    The intercept (column 0) is never penalized. Returns a dict with coef,
    cov, mu, converged flag, iteration count and the per-iteration trace.
    With strict=False a non-converged run returns its last iterate instead
    of raising.
    """
    penalty = np.full(Z.shape[1], ridge)
    penalty[0] = 0.0
    prop = y / trials
    eta = link_function(link, (y + 0.5) / (trials + 1.0))
    coef = np.linalg.lstsq(Z, eta, rcond=None)[0]
    eta = np.clip(Z @ coef, -config.eta_clamp, config.eta_clamp)
    mu = _clamped_mean(link, eta, config)
    objective = _objective(y, trials, mu, penalty, coef)
    trace: List[Dict[str, Any]] = []

    for iteration in range(1, config.irls_max_iter + 1):
        d_mu = np.maximum(mu_eta(link, eta), np.finfo(float).tiny)
        var = mu * (1.0 - mu)
        weights = trials * d_mu * d_mu / var
        score = Z.T @ (trials * (prop - mu) * d_mu / var) - penalty * coef
        max_score = float(np.max(np.abs(score)))
        trace.append({"iteration": iteration, "objective": objective, "max_score": max_score})
        if max_score <= config.irls_tol:
            info = Z.T @ (weights[:, None] * Z) + np.diag(penalty)
            return {"coef": coef, "info": info, "mu": mu, "eta": eta, "converged": True, "iterations": iteration, "trace": trace}

        info = Z.T @ (weights[:, None] * Z) + np.diag(penalty)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("IRLS diverged: singular information matrix", trace) from exc

        accepted = False
        for _ in range(MAX_STEP_HALVINGS):
            candidate = coef + step
            cand_eta = Z @ candidate
            if not np.all(np.isfinite(cand_eta)):
                step = step / 2.0
                continue
            cand_eta = np.clip(cand_eta, -config.eta_clamp, config.eta_clamp)
            cand_mu = _clamped_mean(link, cand_eta, config)
            cand_obj = _objective(y, trials, cand_mu, penalty, candidate)
            if cand_obj <= objective + 1e-12 * max(1.0, abs(objective)):
                coef, eta, mu, objective = candidate, cand_eta, cand_mu, cand_obj
                accepted = True
                break
            step = step / 2.0
        if not accepted:
            if not strict:
                break
            raise NumericalError("IRLS diverged: no step decreases the deviance", trace)

    if not strict:
        d_mu = np.maximum(mu_eta(link, eta), np.finfo(float).tiny)
        weights = trials * d_mu * d_mu / (mu * (1.0 - mu))
        info = Z.T @ (weights[:, None] * Z) + np.diag(penalty)
        return {"coef": coef, "info": info, "mu": mu, "eta": eta, "converged": False, "iterations": len(trace), "trace": trace}
    raise NumericalError(f"IRLS diverged: no convergence in {config.irls_max_iter} iterations", trace)


def fit_glm_binomial(
    d: Dataset,
    link: Link,
    variables: Sequence[int] = (),
    config: Optional[FitConfig] = None,
) -> FittedModel:
    """
    Maximum-likelihood binomial GLM on the chosen columns.

    Raises:
        NumericalError: "IRLS diverged" (with trace) on non-convergence or
            separation, i.e. a fitted linear predictor at the clamp
    """
    config = config or FitConfig()
    link = Link(link)
    trials = _check_binomial(d)
    variables = tuple(sorted(int(j) for j in variables))
    if any(j < 0 or j >= d.p for j in variables):
        raise InvalidInputError(f"variable index out of range for p={d.p}")
    label = _model_label(link, variables, d.names())

    if not variables:
        return _intercept_only(d, link, trials, config, label)

    Z = np.column_stack([np.ones(d.n), d.X[:, list(variables)]])
    result = _irls(Z, d.y, trials, link, config)
    if np.max(np.abs(result["eta"])) >= config.eta_clamp:
        raise NumericalError("IRLS diverged: linear predictor reached the clamp (separation)", result["trace"])
    return _glm_model(d, link, variables, result, label, fallback=False)


def _intercept_only(d: Dataset, link: Link, trials: np.ndarray, config: FitConfig, label: str) -> FittedModel:
    total = float(np.sum(trials))
    p_hat = float(np.sum(d.y)) / total
    clamped = min(max(p_hat, config.prob_clamp), 1.0 - config.prob_clamp)
    eta0 = float(np.clip(link_function(link, np.array([clamped]))[0], -config.eta_clamp, config.eta_clamp))
    slope = float(mu_eta(link, np.array([eta0]))[0])
    var_p = clamped * (1.0 - clamped) / total
    cov = np.array([[var_p / (slope * slope)]])
    mu = np.full(d.n, clamped)
    return FittedModel(
        kind="glm",
        beta=_full_beta(d.p, (), np.array([eta0])),
        support=(),
        link=link,
        cov=cov,
        constant_mean=p_hat,
        loglik=binomial_loglik(d.y, trials, mu),
        n_obs=d.n,
        label=label,
    )


def _glm_model(
    d: Dataset, link: Link, variables: Sequence[int], result: Dict[str, Any], label: str, fallback: bool
) -> FittedModel:
    try:
        cov = np.linalg.inv(result["info"])
    except np.linalg.LinAlgError as exc:
        raise NumericalError("IRLS diverged: singular information at the optimum", result["trace"]) from exc
    return FittedModel(
        kind="glm",
        beta=_full_beta(d.p, variables, result["coef"]),
        support=tuple(variables),
        link=link,
        cov=cov,
        loglik=binomial_loglik(d.y, d.trials, result["mu"]),
        n_obs=d.n,
        converged=result["converged"],
        fallback=fallback,
        n_iter=result["iterations"],
        label=label,
    )


def fit_glm_with_fallback(
    d: Dataset,
    link: Link,
    variables: Sequence[int] = (),
    config: Optional[FitConfig] = None,
    logger: Optional[FitLogger] = None,
) -> FittedModel:
    """fit_glm_binomial, refitting with a small ridge penalty when IRLS diverges"""
    config = config or FitConfig()
    try:
        return fit_glm_binomial(d, link, variables, config)
    except NumericalError as exc:
        link = Link(link)
        variables = tuple(sorted(int(j) for j in variables))
        label = _model_label(link, variables, d.names())
        if logger is not None:
            logger.log_fit(label, status="fallback", reason=str(exc), trace=exc.trace[-5:])
        Z = np.column_stack([np.ones(d.n), d.X[:, list(variables)]])
        relaxed = config.model_copy(update={"irls_max_iter": config.irls_max_iter * 5})
        try:
            result = _irls(Z, d.y, d.trials, link, relaxed, ridge=config.separation_ridge_lambda, strict=False)
        except NumericalError as inner:
            if logger is not None:
                logger.log_fit(label, status="failed", reason=str(inner))
            raise
        return _glm_model(d, link, variables, result, label, fallback=True)
