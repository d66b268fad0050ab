"""
Two-moment g·χ²(h) approximation of Σ λ_j χ²₁
File location: ./panova/decompose/box.py
"""

# imports
import math
from typing import Sequence

import numpy as np
from scipy import stats

from panova.errors import InvalidInputError, NumericalError
from panova.types import BoxApprox


def box_gh(eigenvalues: Sequence[float]) -> BoxApprox:
    """
    Match mean Σλ and variance 2Σλ² with g·χ²(h).

    g = Σλ² / Σλ and h = (Σλ)² / Σλ²
    """
    lam = [float(v) for v in eigenvalues]
    if any(v < 0.0 or not math.isfinite(v) for v in lam):
        raise InvalidInputError("eigenvalues must be finite and >= 0")
    s1 = math.fsum(lam)
    s2 = math.fsum(v * v for v in lam)
    if s1 <= 0.0:
        raise NumericalError("degenerate form: all eigenvalues are zero")
    return BoxApprox(g=s2 / s1, h=s1 * s1 / s2, eigenvalues=tuple(lam))


def box_cdf(box: BoxApprox, x: float | np.ndarray) -> float | np.ndarray:
    """P(g·χ²(h) <= x)"""
    return stats.chi2.cdf(np.asarray(x, dtype=float) / box.g, df=box.h)


def box_quantile(box: BoxApprox, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidInputError("p must lie in (0, 1)")
    return float(box.g * stats.chi2.ppf(p, df=box.h))
