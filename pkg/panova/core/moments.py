"""
Exact finite-mixture moments
Closed-form mean, variance and the within / between split of a
PredictiveMixture. Sums run left to right over components with compensated
summation, so the identity within + between == variance holds exactly.
File location: ./panova/core/moments.py
"""

# imports
import math
from typing import Tuple

from panova.errors import InvalidInputError
from panova.types import PredictiveMixture


def _require_components(m: PredictiveMixture) -> None:
    if len(m.components) == 0:
        raise InvalidInputError("empty mixture")


def mixture_mean(m: PredictiveMixture) -> float:
    """Σ w_i μ_i"""
    _require_components(m)
    return math.fsum(w * c.mean for w, c in zip(m.weights, m.components))


def two_term_decompose(m: PredictiveMixture) -> Tuple[float, float]:
    """
    Law of total variance for a mixture.

    Returns:
        (within, between) with within = Σ w_i σ_i² (expected conditional
        variance) and between = Σ w_i (μ_i − μ̄)² (variance of conditional means)
    """
    mean = mixture_mean(m)
    within = math.fsum(w * c.variance for w, c in zip(m.weights, m.components))
    between = math.fsum(w * (c.mean - mean) ** 2 for w, c in zip(m.weights, m.components))
    return within, between


def mixture_variance(m: PredictiveMixture) -> float:
    """Var(Y) = Σ w_i(σ_i² + μ_i²) − μ̄², evaluated in the centred form"""
    within, between = two_term_decompose(m)
    return within + between


def mixture_second_moment(m: PredictiveMixture) -> float:
    _require_components(m)
    return math.fsum(w * (c.variance + c.mean * c.mean) for w, c in zip(m.weights, m.components))
