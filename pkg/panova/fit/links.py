"""
Binomial link functions: logit, probit and complementary log-log
File location: ./panova/fit/links.py
"""

# imports
import numpy as np
from scipy import special, stats

from panova.types import Link


def link_function(link: Link, mu: np.ndarray) -> np.ndarray:
    """η = g(μ)"""
    mu = np.asarray(mu, dtype=float)
    if link is Link.LOGIT:
        return special.logit(mu)
    if link is Link.PROBIT:
        return stats.norm.ppf(mu)
    return np.log(-np.log1p(-mu))


def inverse_link(link: Link, eta: np.ndarray) -> np.ndarray:
    """μ = g⁻¹(η)"""
    eta = np.asarray(eta, dtype=float)
    if link is Link.LOGIT:
        return special.expit(eta)
    if link is Link.PROBIT:
        return stats.norm.cdf(eta)
    return -np.expm1(-np.exp(eta))


def mu_eta(link: Link, eta: np.ndarray) -> np.ndarray:
    """dμ/dη"""
    eta = np.asarray(eta, dtype=float)
    if link is Link.LOGIT:
        mu = special.expit(eta)
        return mu * (1.0 - mu)
    if link is Link.PROBIT:
        return stats.norm.pdf(eta)
    return np.exp(eta - np.exp(eta))
