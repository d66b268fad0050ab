"""
BIC-approximate posterior model weights
w_i ∝ prior_i · exp(−BIC_i / 2) with BIC_i = −2ℓ_i + k_i log n. Exponents
are shifted by their maximum before exponentiation.
File location: ./panova/average/bic.py
"""

# imports
from typing import Optional, Sequence, Tuple

import numpy as np

from panova.errors import InvalidInputError
from panova.types import WeightVector


def bic_values(logliks: Sequence[float], param_counts: Sequence[int], n: int) -> np.ndarray:
    ll = np.asarray(logliks, dtype=float)
    k = np.asarray(param_counts, dtype=float)
    if ll.shape != k.shape:
        raise InvalidInputError("log-likelihoods and parameter counts differ in length")
    if n < 1 or not (np.all(np.isfinite(ll)) and np.all(np.isfinite(k))):
        raise InvalidInputError("BIC needs finite inputs and n >= 1")
    return -2.0 * ll + k * np.log(n)


def _log_prior(prior: Optional[np.ndarray], shape: Tuple[int, ...]) -> np.ndarray:
    if prior is None:
        return np.zeros(shape)
    prior = np.asarray(prior, dtype=float)
    if prior.shape != shape or np.any(prior < 0.0) or not np.any(prior > 0.0):
        raise InvalidInputError("prior must be nonnegative, conformable and not all zero")
    with np.errstate(divide="ignore"):
        return np.log(prior)


def weights_from_bic(bic: Sequence[float], prior: Optional[Sequence[float]] = None) -> WeightVector:
    """Normalized exp(−BIC/2) weights, optionally times a prior (zero prior → zero weight)"""
    bic = np.asarray(bic, dtype=float)
    if bic.size == 0:
        raise InvalidInputError("no models to weight")
    log_w = -0.5 * bic + _log_prior(None if prior is None else np.asarray(prior), bic.shape)
    log_w -= np.max(log_w)
    w = np.exp(log_w)
    return WeightVector(weights=tuple((w / w.sum()).tolist()), method="bic-posterior")


def bic_weights(
    logliks: Sequence[float],
    param_counts: Sequence[int],
    n: int,
    prior: Optional[Sequence[float]] = None,
) -> WeightVector:
    """Posterior model weights from log-likelihoods and parameter counts"""
    return weights_from_bic(bic_values(logliks, param_counts, n), prior)


def grid_weights(bic: np.ndarray, prior: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Outer and conditional inner weights for a two-factor grid of models.

    Args:
        bic: (m1, m2) BIC per (outer level, inner level) cell
        prior: (m1, m2) nonnegative prior mass; zero cells are excluded

    Returns:
        (xi, omega) with xi the outer marginal of the joint posterior and
        omega[i] the inner weights given outer level i. An outer level with
        no prior mass gets xi = 0 and uniform omega.
    """
    bic = np.asarray(bic, dtype=float)
    if bic.ndim != 2:
        raise InvalidInputError("grid BIC must be a matrix")
    log_joint = -0.5 * bic + _log_prior(prior, bic.shape)
    log_joint = log_joint - np.max(log_joint)
    row_max = np.max(log_joint, axis=1)
    alive = np.isfinite(row_max)
    omega = np.full(bic.shape, 1.0 / bic.shape[1])
    log_row_mass = np.full(bic.shape[0], -np.inf)
    for i in np.flatnonzero(alive):
        scaled = np.exp(log_joint[i] - row_max[i])
        omega[i] = scaled / scaled.sum()
        log_row_mass[i] = row_max[i] + np.log(scaled.sum())
    log_row_mass -= np.max(log_row_mass)
    xi = np.exp(log_row_mass)
    return xi / xi.sum(), omega
