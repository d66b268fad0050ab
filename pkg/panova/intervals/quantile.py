"""
Mixture CDF and quantiles
Exact per-family CDFs; quantiles by bracketed root finding for smooth
gaussian mixtures, integer search for binomial-count mixtures and bisection
on the generalized inverse otherwise.
File location: ./panova/intervals/quantile.py
"""

# imports
import math
from typing import Tuple

import numpy as np
from scipy import optimize, stats

from panova.errors import InvalidInputError
from panova.types import ComponentPredictive, Family, PredictiveMixture

TAIL_SDS = 40.0
MAX_BISECTIONS = 400


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def component_cdf(c: ComponentPredictive, x: float) -> float:
    if c.family is Family.BINOMIAL:
        return float(stats.binom.cdf(math.floor(x), c.trials, c.success_prob))
    if c.family is Family.EMPIRICAL:
        samples = np.asarray(c.samples)
        return float(np.count_nonzero(samples <= x)) / samples.size
    if c.variance == 0.0:
        return 1.0 if x >= c.mean else 0.0
    return float(stats.norm.cdf(x, loc=c.mean, scale=c.sd))


def _support_bounds(c: ComponentPredictive) -> Tuple[float, float]:
    if c.family is Family.BINOMIAL:
        return 0.0, float(c.trials)
    if c.family is Family.EMPIRICAL:
        return float(min(c.samples)), float(max(c.samples))
    return c.mean - TAIL_SDS * c.sd, c.mean + TAIL_SDS * c.sd


def _check(m: PredictiveMixture, p: float) -> None:
    if len(m.components) == 0:
        raise InvalidInputError("empty mixture")
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must lie in (0, 1), got {p!r}")


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def mixture_cdf(m: PredictiveMixture, x: float) -> float:
    """Σ w_i F_i(x)"""
    if len(m.components) == 0:
        raise InvalidInputError("empty mixture")
    return math.fsum(w * component_cdf(c, x) for w, c in zip(m.weights, m.components) if w > 0.0)


def mixture_quantile(m: PredictiveMixture, p: float, tol: float = 1e-10) -> float:
    """Smallest x with F(x) >= p"""
    _check(m, p)
    live = [(w, c) for w, c in zip(m.weights, m.components) if w > 0.0]
    families = {c.family for _, c in live}

    if len(live) == 1 and live[0][1].family is Family.EMPIRICAL:
        return float(np.quantile(np.asarray(live[0][1].samples), p))

    if families == {Family.BINOMIAL}:
        top = max(c.trials for _, c in live)
        grid = np.arange(top + 1)
        cdf = sum(w * stats.binom.cdf(grid, c.trials, c.success_prob) for w, c in live)
        return float(grid[np.searchsorted(cdf, p - tol)])

    bounds = [_support_bounds(c) for _, c in live]
    lo = min(b[0] for b in bounds)
    hi = max(b[1] for b in bounds)
    if lo == hi:
        return lo

    smooth = families == {Family.GAUSSIAN} and all(c.variance > 0.0 for _, c in live)
    if smooth:
        scale = hi - lo
        return float(
            optimize.brentq(lambda x: mixture_cdf(m, x) - p, lo, hi, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps, maxiter=500)
        )

    # generalized inverse: keep F(lo) < p <= F(hi)
    lo -= 1.0
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if mixture_cdf(m, mid) >= p:
            hi = mid
        else:
            lo = mid
    return hi
