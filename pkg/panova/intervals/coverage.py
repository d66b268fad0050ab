"""
Empirical coverage of prediction intervals
Two estimators:
  - coverage_estimate(s): B independent replicates, each building intervals and
    drawing one fresh outcome; coverage = (1/B) Σ 1{y_b ∈ PI_b}
  - held_out_coverage: fraction of a batch of held-out outcomes inside one
    fixed interval (the evaluation draws of a single run)
sample_mixture produces evaluation draws from a mixture by allocating
n_j = N·w_j draws to component j.
File location: ./panova/intervals/coverage.py
"""

# imports
from typing import Callable, List, Sequence

import numpy as np

from panova.errors import InvalidInputError
from panova.infrastructure.parallel import parallel_map, philox_rng
from panova.types import ComponentPredictive, Family, PredictionInterval, PredictiveMixture

MIN_COVERAGE_B = 100

IntervalBuilder = Callable[[np.random.Generator], PredictionInterval]
OutcomeSampler = Callable[[np.random.Generator], float]


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _allocate(weights: Sequence[float], size: int) -> np.ndarray:
    """Largest-remainder rounding of size·w so the counts sum to size exactly"""
    raw = np.asarray(weights, dtype=float) * size
    counts = np.floor(raw).astype(int)
    short = size - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def sample_component(c: ComponentPredictive, size: int, rng: np.random.Generator) -> np.ndarray:
    if c.family is Family.BINOMIAL:
        return rng.binomial(c.trials, c.success_prob, size=size).astype(float)
    if c.family is Family.EMPIRICAL:
        return rng.choice(np.asarray(c.samples), size=size, replace=True)
    return rng.normal(c.mean, c.sd, size=size)


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def sample_mixture(m: PredictiveMixture, size: int, rng: np.random.Generator) -> np.ndarray:
    """size draws from the mixture, n_j = size·w_j of them from component j"""
    if len(m) == 0:
        raise InvalidInputError("empty mixture")
    counts = _allocate(m.weights, size)
    parts = [sample_component(c, int(n), rng) for c, n in zip(m.components, counts) if n > 0]
    return np.concatenate(parts)


def held_out_coverage(interval: PredictionInterval, outcomes: Sequence[float]) -> float:
    y = np.asarray(outcomes, dtype=float)
    if y.size == 0:
        raise InvalidInputError("no held-out outcomes")
    return float(np.mean(interval.contains(y)))


def coverage_estimates(
    build_intervals: Callable[[np.random.Generator], Sequence[PredictionInterval]],
    draw_outcome: OutcomeSampler,
    B: int = 1000,
    seed: int = 0,
    n_jobs: int = 1,
    progress: bool = False,
) -> List[float]:
    """
    Coverage of several intervals built in the same replicates. Replicate b
    uses stream seed + b: it builds its intervals (typically by simulating a
    fresh training set and refitting) and then draws y_b from the same stream.
    """
    if B < MIN_COVERAGE_B:
        raise InvalidInputError(f"coverage needs B >= {MIN_COVERAGE_B}, got {B}")

    def replicate(index: int) -> List[bool]:
        rng = philox_rng(seed, index)
        intervals = build_intervals(rng)
        y = draw_outcome(rng)
        return [bool(pi.contains(y)) for pi in intervals]

    hits = np.array(parallel_map(replicate, range(B), n_jobs=n_jobs, progress=progress, desc="coverage"))
    return [float(v) for v in hits.mean(axis=0)]


def coverage_estimate(
    build_interval: IntervalBuilder,
    draw_outcome: OutcomeSampler,
    B: int = 1000,
    seed: int = 0,
    n_jobs: int = 1,
    progress: bool = False,
) -> float:
    """(1/B) Σ 1{y_b ∈ PI_b} for a single interval builder"""
    return coverage_estimates(lambda rng: [build_interval(rng)], draw_outcome, B, seed, n_jobs, progress)[0]
