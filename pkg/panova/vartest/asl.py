"""
Bootstrap test of H0: E[term / total] >= tau against H1: < tau
Given B ratio samples z, the observed statistic is t = (z̄ − τ)/SE(z̄).
Its null distribution comes from J resamples of z. Two constructions:

  shift   (default) t̃_j = (z̄′_j − z̄) / SE(z′_j), resamples centred at the
          observed mean
  literal recentre each resample by its own mean and τ, then
          t̃_j = (mean(z̃′_j) − τ) / SE(z̃′_j); the numerator is zero up to
          rounding, so this form only reports the sign of t

ASL = (1/J) #{t̃_j <= t}; small ASL rejects H0.
File location: ./panova/vartest/asl.py
"""

# imports
import math
from typing import List, Literal, NamedTuple, Optional, Sequence

import numpy as np

from panova.errors import InvalidInputError
from panova.infrastructure.parallel import philox_rng
from panova.types import CONVENTIONAL_LEVELS, TestOutcome, level_key

NullMethod = Literal["shift", "literal"]
MIN_J = 1000
RESAMPLE_CHUNK = 1000


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _null_statistics(z: np.ndarray, tau: float, J: int, seed: int, null_method: NullMethod) -> np.ndarray:
    B = z.size
    rng = philox_rng(seed)
    zbar = float(z.mean())
    stats = np.empty(J)
    for start in range(0, J, RESAMPLE_CHUNK):
        rows = min(RESAMPLE_CHUNK, J - start)
        resampled = z[rng.integers(0, B, size=(rows, B))]
        means = resampled.mean(axis=1)
        if null_method == "literal":
            recentred = resampled - (means - tau)[:, None]
            numerator = recentred.mean(axis=1) - tau
            se = recentred.std(axis=1, ddof=1) / math.sqrt(B)
        else:
            numerator = means - zbar
            se = resampled.std(axis=1, ddof=1) / math.sqrt(B)
        with np.errstate(divide="ignore", invalid="ignore"):
            block = numerator / se
        # constant resamples: no spread, the statistic carries only the sign
        block[se == 0.0] = np.sign(numerator[se == 0.0]) * np.inf
        block[np.isnan(block)] = 0.0
        stats[start : start + rows] = block
    return stats


def _degenerate(z: np.ndarray, tau: float, J: int, null_method: NullMethod, levels: Sequence[float]) -> TestOutcome:
    zbar = float(z.mean())
    asl = 1.0 if zbar >= tau else 0.0
    diff = zbar - tau
    return TestOutcome(
        z_samples=tuple(z.tolist()),
        z_bar=zbar,
        se=0.0,
        t_stat=0.0 if diff == 0.0 else math.copysign(math.inf, diff),
        tau=tau,
        J=J,
        asl=asl,
        reject_at={level_key(a): asl < a for a in levels},
        degenerate=True,
        null_method=null_method,
    )


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def asl_test(
    z: Sequence[float],
    tau: float,
    J: int = 10_000,
    seed: int = 0,
    null_method: NullMethod = "shift",
    levels: Sequence[float] = CONVENTIONAL_LEVELS,
) -> TestOutcome:
    """Achieved significance level of the one-sided test for one set of ratio samples"""
    z = np.asarray(z, dtype=float).ravel()
    if z.size < 2:
        raise InvalidInputError("test needs B >= 2 ratio samples")
    if not 0.0 < tau < 1.0:
        raise InvalidInputError(f"tau must lie in (0, 1), got {tau!r}")
    if J < MIN_J:
        raise InvalidInputError(f"J must be >= {MIN_J}, got {J}")
    s = float(z.std(ddof=1))
    if s == 0.0:
        return _degenerate(z, tau, J, null_method, levels)
    zbar = float(z.mean())
    se = s / math.sqrt(z.size)
    t = (zbar - tau) / se
    null = _null_statistics(z, tau, J, seed, null_method)
    asl = int(np.count_nonzero(null <= t)) / J
    return TestOutcome(
        z_samples=tuple(z.tolist()),
        z_bar=zbar,
        se=se,
        t_stat=t,
        tau=tau,
        J=J,
        asl=asl,
        reject_at={level_key(a): asl < a for a in levels},
        null_method=null_method,
    )


class TauSweep(NamedTuple):
    taus: List[float]
    outcomes: List[TestOutcome]
    threshold: float
    crossing: Optional[float]

    @property
    def asls(self) -> List[float]:
        return [o.asl for o in self.outcomes]


def tau_sweep(
    z: Sequence[float],
    taus: Sequence[float],
    J: int = 10_000,
    seed: int = 0,
    threshold: float = 0.05,
    null_method: NullMethod = "shift",
) -> TauSweep:
    """
    ASL for every tau (same null resamples throughout) and the smallest tau
    at which H0 is rejected, or None if it never is.
    """
    ordered = sorted(float(t) for t in taus)
    outcomes = [asl_test(z, tau, J, seed, null_method) for tau in ordered]
    crossing = next((tau for tau, o in zip(ordered, outcomes) if o.asl < threshold), None)
    return TauSweep(ordered, outcomes, threshold, crossing)
