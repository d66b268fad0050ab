"""
Model-list selection by coverage and predictive variance
Each candidate is a factor tree (one model list). Its estimated coverage is
the fraction of g fresh outcomes inside the PI of its flattened predictive;
all candidates see the same outcomes. Among candidates whose coverage lies
in the open band (1 - alpha - delta, 1 - alpha + delta) the one with the
smallest total predictive variance wins, ties within VARIANCE_TIE_TOL going
to the lowest index. With an empty band the candidate whose coverage is
closest to 1 - alpha is returned and the result is flagged.
File location: ./panova/intervals/selection.py
"""

# imports
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from panova.core.moments import mixture_variance
from panova.core.tree import flatten
from panova.errors import InvalidInputError
from panova.infrastructure.io import table_frame, write_csv
from panova.infrastructure.parallel import philox_rng
from panova.intervals.coverage import held_out_coverage
from panova.intervals.interval import prediction_interval
from panova.types import FactorTree

VARIANCE_TIE_TOL = 1e-9
NO_CANDIDATE_FLAG = "no candidate within δ"

OutcomeSampler = Callable[[np.random.Generator], float]


class SelectionResult(NamedTuple):
    index: int
    coverages: List[float]
    variances: List[float]
    eligible: List[int]
    flag: Optional[str]
    labels: List[str]

    @property
    def flagged(self) -> bool:
        return self.flag is not None

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "candidate": label,
                "coverage": cov,
                "variance": var,
                "eligible": j in self.eligible,
                "chosen": j == self.index,
            }
            for j, (label, cov, var) in enumerate(zip(self.labels, self.coverages, self.variances))
        ]


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _draw_outcomes(sampler: OutcomeSampler, g: int, seed: int) -> np.ndarray:
    return np.array([sampler(philox_rng(seed, i)) for i in range(g)], dtype=float)


def _choose(coverages: Sequence[float], variances: Sequence[float], alpha: float, delta: float):
    nominal = 1.0 - alpha
    eligible = [j for j, c in enumerate(coverages) if nominal - delta < c < nominal + delta]
    if eligible:
        best = min(variances[j] for j in eligible)
        index = next(j for j in eligible if variances[j] - best <= VARIANCE_TIE_TOL)
        return index, eligible, None
    gaps = [abs(c - nominal) for c in coverages]
    return int(np.argmin(gaps)), eligible, NO_CANDIDATE_FLAG


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def select_model_list(
    candidates: Sequence[FactorTree],
    alpha: float = 0.05,
    delta: float = 0.02,
    g: int = 100,
    seed: int = 0,
    outcome_sampler: Optional[OutcomeSampler] = None,
    coverages: Optional[Sequence[float]] = None,
    labels: Optional[Sequence[str]] = None,
) -> SelectionResult:
    """
    Pick a model list. Coverage comes from `coverages` when given (for example
    cross-validated estimates), otherwise from g outcomes of outcome_sampler,
    outcome i drawn from stream seed + i.
    """
    if not candidates:
        raise InvalidInputError("select_model_list needs at least one candidate")
    if delta <= 0.0:
        raise InvalidInputError(f"delta must be > 0, got {delta!r}")
    labels = list(labels) if labels is not None else [f"list {j + 1}" for j in range(len(candidates))]
    mixtures = [flatten(t) for t in candidates]
    variances = [mixture_variance(m) for m in mixtures]

    if coverages is None:
        if outcome_sampler is None:
            raise InvalidInputError("either coverages or an outcome sampler is required")
        if g < 1:
            raise InvalidInputError(f"g must be >= 1, got {g}")
        outcomes = _draw_outcomes(outcome_sampler, g, seed)
        coverages = [held_out_coverage(prediction_interval(m, alpha), outcomes) for m in mixtures]
    elif len(coverages) != len(candidates):
        raise InvalidInputError(f"expected {len(candidates)} coverages, got {len(coverages)}")

    coverages = [float(c) for c in coverages]
    index, eligible, flag = _choose(coverages, variances, alpha, delta)
    return SelectionResult(index, coverages, variances, eligible, flag, labels)


def write_selection_report(result: SelectionResult, path: str | Path) -> Path:
    frame = table_frame(result.rows(), rounded={"coverage": 2, "variance": 2})
    return write_csv(path, frame)
