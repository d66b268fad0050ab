"""
Sample-size sweep of the binomial grid study
For each n (and replicate) the generator draws a fresh dataset, the grid is
fitted and decomposed, and optionally every term is tested. Outputs are a
tests table with one formatted cell per term, 'z̄ (ASL_τ1,ASL_τ2,ASL_τ3)',
and curve files with the absolute and proportional term values by n.
File location: ./panova/experiments/sweep.py
"""

# imports
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

from panova.config import AppConfig, TestConfig
from panova.core.tree import decompose_k, table_sources
from panova.errors import ConfigError
from panova.experiments.binomial import FACTORS, fit_binomial_grid, prior_matrix
from panova.experiments.reporting import StudyResult, study_dir
from panova.experiments.scenarios import SweepScenario, simulate_binomial
from panova.fit.grid import variable_sets
from panova.infrastructure.io import table_frame, write_csv
from panova.infrastructure.logging import get_replicate_logger, get_study_logger
from panova.infrastructure.parallel import child_seed, parallel_map, philox_rng
from panova.types import DecompositionReport
from panova.vartest.bootstrap import TermTestTable, format_cell, test_all_terms

CURVE_COLUMNS = ("links", "models", "predictions")


class SweepPoint(NamedTuple):
    n: int
    replicate: int
    report: DecompositionReport
    table: Optional[TermTestTable]


def _curve_row(point: SweepPoint, proportional: bool) -> Dict[str, Any]:
    values = point.report.proportions if proportional else point.report.terms
    total = 1.0 if proportional else point.report.total
    row: Dict[str, Any] = {"n": point.n, "replicate": point.replicate, "total": total}
    row.update(dict(zip(CURVE_COLUMNS, values)))
    return row


def _table_row(point: SweepPoint) -> Dict[str, Any]:
    """Predictions, Models, Links order with full-precision companions"""
    row: Dict[str, Any] = {"n": point.n, "replicate": point.replicate}
    table = point.table
    z_bars = table.z_bars()
    for term_index in reversed(range(len(table.sources))):
        source = table.sources[term_index]
        asls = [o.asl for o in table.outcomes[term_index]]
        row[source] = format_cell(z_bars[term_index], asls)
    for term_index, source in enumerate(table.sources):
        row[f"{source}_zbar"] = z_bars[term_index]
        for tau, o in zip(table.taus, table.outcomes[term_index]):
            row[f"{source}_asl_{tau:g}"] = o.asl
    return row


def _medians(points: List[SweepPoint]) -> Dict[int, Dict[str, float]]:
    result: Dict[int, Dict[str, float]] = {}
    for n in sorted({p.n for p in points}):
        at_n = [p for p in points if p.n == n]
        props = np.array([p.report.proportions for p in at_n])
        result[n] = {
            "total": float(np.median([p.report.total for p in at_n])),
            **{f"{c}_proportion": float(v) for c, v in zip(CURVE_COLUMNS, np.median(props, axis=0))},
        }
    return result


def run_n_sweep(
    s: SweepScenario,
    config: Optional[AppConfig] = None,
    out_dir: Optional[Path] = None,
) -> StudyResult:
    config = config or AppConfig.default_for_development()
    runtime = config.runtime
    if s.data is not None:
        raise ConfigError("the n sweep draws its data from the generator; remove 'data'")
    out = study_dir(out_dir or runtime.out_dir, s.name)
    trace = get_study_logger(runtime.log_dir)
    replicate_log = get_replicate_logger(s.name, runtime.log_dir)
    test_config = TestConfig(B=s.B, J=s.J, taus=s.taus, asl_threshold=config.test.asl_threshold, null_method=s.null_method)
    sets = variable_sets(s.p, s.max_set_size)
    prior = prior_matrix(s.prior, (len(s.links), len(sets)))
    jobs = [(n, r) for n in s.n_list for r in range(s.replicates)]

    def run_point(job) -> SweepPoint:
        n, r = job
        seed = child_seed(s.seed, n, r)
        d, x_new = simulate_binomial(s, n, philox_rng(seed))
        fit = fit_binomial_grid(d, x_new, s.links, sets, s.target, s.trials, prior, config.fit)
        table = None
        if s.run_tests:
            table = test_all_terms(
                lambda data, _seed: fit_binomial_grid(data, x_new, s.links, sets, s.target, s.trials, prior, config.fit).tree,
                d, s.taus, s.B, s.J, child_seed(seed, 10), test_config,
                max_redraws=config.fit.max_redraws, n_jobs=runtime.threads,
                replicate_logger=replicate_log,
            )
        return SweepPoint(n, r, decompose_k(fit.tree), table)

    trace.log_stage("n_sweep", "start", name=s.name, n_list=s.n_list, replicates=s.replicates)
    outer_jobs = 1 if s.run_tests else runtime.threads
    points = parallel_map(run_point, jobs, n_jobs=outer_jobs, progress=runtime.progress, desc="n sweep")

    outputs: Dict[str, Path] = {}
    outputs["curve_absolute"] = write_csv(out / "curve_absolute.csv", table_frame([_curve_row(p, False) for p in points]))
    outputs["curve_proportion"] = write_csv(out / "curve_proportion.csv", table_frame([_curve_row(p, True) for p in points]))
    if s.run_tests:
        outputs["tests"] = write_csv(out / "tests_by_n.csv", table_frame([_table_row(p) for p in points]))
    medians = _medians(points)
    trace.log_stage("n_sweep", "done", name=s.name)

    return StudyResult(
        name=s.name,
        study=s.study,
        outputs=outputs,
        summary={
            "sources": table_sources(FACTORS),
            "medians": {str(n): v for n, v in medians.items()},
        },
    )
