"""
Equal-tail prediction intervals
PI(alpha) = [q_{alpha/2}, q_{1-alpha/2}] of a mixture predictive, plus the
per-model table that sets the mixture's interval next to each component's.
File location: ./panova/intervals/interval.py
"""

# imports
from typing import Any, Dict, List, Optional, Sequence

from panova.core.moments import mixture_variance
from panova.errors import InvalidInputError
from panova.intervals.quantile import mixture_quantile
from panova.types import ComponentPredictive, PredictionInterval, PredictiveMixture, create_mixture

MIXTURE_LABEL = "STK avg"


def prediction_interval(m: PredictiveMixture, alpha: float, source: str = "", tol: float = 1e-10) -> PredictionInterval:
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha!r}")
    lower = mixture_quantile(m, alpha / 2.0, tol)
    upper = mixture_quantile(m, 1.0 - alpha / 2.0, tol)
    return PredictionInterval(lower=lower, upper=upper, alpha=alpha, source=source)


def component_interval(c: ComponentPredictive, alpha: float, source: str = "", tol: float = 1e-10) -> PredictionInterval:
    """Interval of a single component, treated as a one-point mixture"""
    return prediction_interval(create_mixture([1.0], [c]), alpha, source, tol)


def per_model_table(
    m: PredictiveMixture,
    alpha: float,
    coverages: Optional[Sequence[float]] = None,
    mixture_label: str = MIXTURE_LABEL,
) -> List[Dict[str, Any]]:
    """
    Rows for the mixture and then each component: weight, variance, interval and,
    when given, coverage. coverages lists the mixture first, then the components.
    """
    labels = list(m.labels) if m.labels is not None else [f"model {j + 1}" for j in range(len(m))]
    if coverages is not None and len(coverages) != len(m) + 1:
        raise InvalidInputError(f"expected {len(m) + 1} coverages, got {len(coverages)}")

    intervals = [prediction_interval(m, alpha, mixture_label)]
    intervals += [component_interval(c, alpha, label) for c, label in zip(m.components, labels)]
    variances = [mixture_variance(m)] + [c.variance for c in m.components]
    weights: List[Optional[float]] = [None] + list(m.weights)

    rows = []
    for j, (pi, variance, weight) in enumerate(zip(intervals, variances, weights)):
        row: Dict[str, Any] = {
            "candidate": pi.source,
            "weight": weight,
            "variance": variance,
            "lower": pi.lower,
            "upper": pi.upper,
            "width": pi.width,
        }
        if coverages is not None:
            row["coverage"] = float(coverages[j])
        rows.append(row)
    return rows
