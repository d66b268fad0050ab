"""
Bootstrap ratio samples and the all-terms test table
A pipeline maps (dataset, seed) to a FactorTree. Each replicate runs the
pipeline on a case resample and records every term's share of the total
predictive variance, so one set of replicates serves all terms and all τ.
File location: ./panova/vartest/bootstrap.py
"""

# imports
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from panova.config import TestConfig
from panova.core.moments import mixture_variance
from panova.core.tree import decompose_terms, flatten, table_sources
from panova.errors import InvalidInputError
from panova.infrastructure.logging import ReplicateLogger, StudyTraceLogger
from panova.infrastructure.parallel import child_seed, parallel_map, run_with_redraws
from panova.types import Dataset, FactorTree, TestOutcome
from panova.vartest.asl import asl_test

Pipeline = Callable[[Dataset, int], FactorTree]
PROPORTION_TOL = 1e-9
MAX_SEED = 2**31 - 1


# ──────────────────────────────────────────────────────────────────────────────
# Helper classes
# ──────────────────────────────────────────────────────────────────────────────

class RatioMatrix(NamedTuple):
    """(B, K+1) term shares plus the replicates whose raw shares left [0, 1]"""

    z: np.ndarray
    flagged: List[int]


class TermTestTable(NamedTuple):
    """One TestOutcome per (term, tau), computed from shared replicates"""

    sources: List[str]
    taus: List[float]
    outcomes: List[List[TestOutcome]]
    ratios: RatioMatrix
    trees: List[FactorTree]

    def z_bars(self) -> List[float]:
        return [float(col.mean()) for col in self.ratios.z.T]

    def asl(self, term_index: int, tau: float) -> float:
        return self.outcomes[term_index][self.taus.index(tau)].asl


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def bootstrap_trees(
    pipeline: Pipeline,
    d: Dataset,
    B: int,
    seed: int,
    max_redraws: int = 10,
    n_jobs: int = 1,
    logger: Optional[ReplicateLogger] = None,
    progress: bool = False,
) -> List[FactorTree]:
    """Pipeline output on B case resamples; replicate b uses stream seed + b"""
    if B < 2:
        raise InvalidInputError(f"bootstrap needs B >= 2, got {B}")

    def draw(rng: np.random.Generator) -> FactorTree:
        rows = rng.integers(0, d.n, size=d.n)
        if np.unique(rows).size < 2:
            raise InvalidInputError("degenerate resample")
        return pipeline(d.take(rows), int(rng.integers(0, MAX_SEED)))

    def replicate(index: int) -> FactorTree:
        return run_with_redraws(draw, seed, index, max_redraws, logger)

    return parallel_map(replicate, range(B), n_jobs=n_jobs, progress=progress, desc="bootstrap")


def ratio_matrix(trees: Sequence[FactorTree]) -> RatioMatrix:
    """Each replicate's terms divided by its total predictive variance, clipped to [0, 1]"""
    rows = []
    flagged = []
    for b, tree in enumerate(trees):
        terms = np.array(decompose_terms(tree))
        total = mixture_variance(flatten(tree))
        shares = terms / total if total > 0.0 else np.zeros_like(terms)
        if np.any(shares < -PROPORTION_TOL) or np.any(shares > 1.0 + PROPORTION_TOL):
            flagged.append(b)
        rows.append(np.clip(shares, 0.0, 1.0))
    return RatioMatrix(np.array(rows), flagged)


def bootstrap_ratio_samples(
    pipeline: Pipeline,
    d: Dataset,
    term_index: int,
    B: int,
    seed: int,
    max_redraws: int = 10,
    n_jobs: int = 1,
    logger: Optional[ReplicateLogger] = None,
) -> np.ndarray:
    """Z_b = term / total on B case resamples"""
    if B < 50:
        raise InvalidInputError(f"ratio bootstrap needs B >= 50, got {B}")
    trees = bootstrap_trees(pipeline, d, B, seed, max_redraws, n_jobs, logger)
    return ratio_matrix(trees).z[:, term_index]


def test_all_terms(
    pipeline: Pipeline,
    d: Dataset,
    taus: Sequence[float],
    B: int,
    J: int,
    seed: int,
    config: Optional[TestConfig] = None,
    max_redraws: int = 10,
    n_jobs: int = 1,
    replicate_logger: Optional[ReplicateLogger] = None,
    trace_logger: Optional[StudyTraceLogger] = None,
    progress: bool = False,
) -> TermTestTable:
    """Test every decomposition term at every tau from one set of B replicates"""
    config = config or TestConfig()
    trees = bootstrap_trees(pipeline, d, B, seed, max_redraws, n_jobs, replicate_logger, progress)
    return test_from_trees(trees, taus, J, child_seed(seed, 1), config, trace_logger)


def test_from_trees(
    trees: Sequence[FactorTree],
    taus: Sequence[float],
    J: int,
    seed: int,
    config: Optional[TestConfig] = None,
    trace_logger: Optional[StudyTraceLogger] = None,
) -> TermTestTable:
    """Test table from already computed replicate trees"""
    config = config or TestConfig()
    ratios = ratio_matrix(trees)
    if ratios.flagged and trace_logger is not None:
        trace_logger.log_warning("replicate shares outside [0, 1]", replicates=ratios.flagged)
    sources = table_sources(trees[0].factors)
    ordered = sorted(float(t) for t in taus)
    outcomes = []
    for term_index, source in enumerate(sources):
        row = []
        for tau in ordered:
            outcome = asl_test(ratios.z[:, term_index], tau, J, child_seed(seed, term_index), config.null_method)
            row.append(outcome.model_copy(update={"term_index": term_index, "source": source}))
        outcomes.append(row)
    return TermTestTable(sources, ordered, outcomes, ratios, list(trees))


# not pytest tests, even when imported into a test module
test_all_terms.__test__ = False  # type: ignore[attr-defined]
test_from_trees.__test__ = False  # type: ignore[attr-defined]


# ──────────────────────────────────────────────────────────────────────────────
# Table formatting
# ──────────────────────────────────────────────────────────────────────────────

def format_cell(z_bar: float, asls: Sequence[float]) -> str:
    """'z̄ (ASL_τ1,ASL_τ2,...)', e.g. '0.04 (1,0.034,0)'"""
    return f"{z_bar:.2g} (" + ",".join(f"{a:.3g}" for a in asls) + ")"


def table_row(label_name: str, label: object, table: TermTestTable) -> dict:
    """One row of a tests table: a formatted cell plus full-precision columns per term"""
    row: dict = {label_name: label}
    z_bars = table.z_bars()
    for term_index, source in enumerate(table.sources):
        asls = [o.asl for o in table.outcomes[term_index]]
        row[source] = format_cell(z_bars[term_index], asls)
        row[f"{source}_zbar"] = z_bars[term_index]
        for tau, asl in zip(table.taus, asls):
            row[f"{source}_asl_{tau:g}"] = asl
    return row

