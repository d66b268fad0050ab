"""
Binomial links × variable-sets study
Every (link, variable set) cell is a binomial GLM. BIC approximations to the
posterior give the link weights and the variable-set weights within each
link, and the predictives at x_new form a two-factor tree (links outer,
variable sets inner) whose three-term decomposition is tested term by term.
File location: ./panova/experiments/binomial.py
"""

# imports
from pathlib import Path
from typing import Any, Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from panova.config import AppConfig, FitConfig, TestConfig
from panova.average.bic import bic_values, grid_weights
from panova.average.importance import joint_from_conditionals, model_importance, variable_set_importance
from panova.core.tree import decompose_k
from panova.decompose.distribution import with_diagnostics
from panova.decompose.report import write_report
from panova.errors import ConfigError
from panova.experiments.reporting import StudyResult, StudySetup, study_dir, write_test_table
from panova.experiments.scenarios import BinomialScenario, simulate_binomial
from panova.fit.glm import fit_glm_with_fallback
from panova.fit.grid import GridModelSpec, model_grid, variable_sets
from panova.infrastructure.io import table_frame, write_csv
from panova.infrastructure.logging import FitLogger, get_fit_logger, get_replicate_logger, get_study_logger
from panova.infrastructure.parallel import child_seed, philox_rng
from panova.types import Dataset, FactorTree, FittedModel, Link, create_tree
from panova.vartest.bootstrap import test_all_terms

FACTORS = ("Links", "Models")
Target = Literal["probability", "count"]

# count leaves are Binomial(trials, p_hat) at the fitted p_hat; the sampling
# variance of p_hat enters only through the probability target
LEAF_PREDICTIVE = {
    "count": "plug-in binomial (p_hat variance not included)",
    "probability": "gaussian with delta-method p_hat variance",
}


class BinomialGridFit(NamedTuple):
    tree: FactorTree
    grid: List[GridModelSpec]
    models: List[Optional[FittedModel]]
    bic: np.ndarray
    xi: np.ndarray
    omega: np.ndarray
    target: Target = "count"


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _set_label(variables: Sequence[int], names: Sequence[str]) -> str:
    return ",".join(names[j] for j in variables) if variables else "no effect"


def prior_matrix(prior: Optional[Sequence[Sequence[float]]], shape: tuple) -> Optional[np.ndarray]:
    if prior is None:
        return None
    matrix = np.asarray(prior, dtype=float)
    if matrix.shape != shape:
        raise ConfigError(f"prior has shape {matrix.shape}, the model grid is {shape}")
    return matrix


def fit_binomial_grid(
    d: Dataset,
    x_new: np.ndarray,
    links: Sequence[Link],
    sets: Sequence[Sequence[int]],
    target: Target = "count",
    trials_new: Optional[int] = None,
    prior: Optional[np.ndarray] = None,
    config: Optional[FitConfig] = None,
    logger: Optional[FitLogger] = None,
) -> BinomialGridFit:
    """
    Fit the grid and assemble the two-factor tree at x_new.

    Cells with zero prior mass are not fitted; a link whose cells all have zero
    prior gets zero edge weight and uniform inner weights.
    """
    config = config or FitConfig()
    grid = model_grid(links, sets)
    shape = (len(links), len(sets))
    mask = np.ones(shape, dtype=bool) if prior is None else np.asarray(prior) > 0.0
    names = d.names()

    models: List[Optional[FittedModel]] = []
    logliks = np.zeros(len(grid))
    counts = np.zeros(len(grid))
    for cell in grid:
        i, j = divmod(cell.index, len(sets))
        if not mask[i, j]:
            models.append(None)
            continue
        model = fit_glm_with_fallback(d, cell.link, cell.variables, config, logger)
        models.append(model)
        logliks[cell.index] = model.loglik
        counts[cell.index] = model.n_params
    bic = bic_values(logliks, counts, d.n).reshape(shape)
    bic[~mask] = 0.0
    xi, omega = grid_weights(bic, prior)

    leaves = []
    for model in models:
        # unfitted cells have zero weight and borrow a fitted cell's predictive
        source = model if model is not None else next(m for m in models if m is not None)
        leaves.append(source.predictive(x_new, target=target, trials=trials_new))
    tree = create_tree(
        FACTORS,
        [[link.value for link in links], [_set_label(v, names) for v in sets]],
        [xi, omega],
        leaves,
        weight_source="posterior",
    )
    return BinomialGridFit(tree, grid, models, bic, xi, omega, target)


def grid_rows(fit: BinomialGridFit, names: Sequence[str]) -> List[Dict[str, Any]]:
    joint = joint_from_conditionals(fit.xi, fit.omega).ravel()
    rows = []
    for cell, model, leaf, w in zip(fit.grid, fit.models, fit.tree.leaves, joint):
        i, j = divmod(cell.index, fit.omega.shape[1])
        rows.append(
            {
                "model": cell.label(names),
                "link": cell.link.value,
                "variables": _set_label(cell.variables, names),
                "fitted": model is not None,
                "loglik": None if model is None else model.loglik,
                "bic": None if model is None else float(fit.bic[i, j]),
                "fallback": False if model is None else model.fallback,
                "weight": float(w),
                "mean": leaf.mean if model is not None else None,
                "variance": leaf.variance if model is not None else None,
                "predictive": LEAF_PREDICTIVE[fit.target],
            }
        )
    return rows


def importance_rows(fit: BinomialGridFit) -> List[Dict[str, Any]]:
    joint = joint_from_conditionals(fit.xi, fit.omega)
    rows = [
        {"factor": FACTORS[0], "level": level, "importance": float(v)}
        for level, v in zip(fit.tree.levels[0], model_importance(joint))
    ]
    rows += [
        {"factor": FACTORS[1], "level": level, "importance": float(v)}
        for level, v in zip(fit.tree.levels[1], variable_set_importance(joint))
    ]
    return rows


def load_binomial_data(s: BinomialScenario, n: int, seed: int):
    """(data, x_new, trials at x_new) from the scenario's CSV or generator"""
    if s.data is not None:
        d, x_new = s.data.load()
        trials_new = s.data.trials_new
        if s.target == "count" and trials_new is None:
            raise ConfigError("count target needs data.trials_new")
        return d, x_new, trials_new
    d, x_new = simulate_binomial(s, n, philox_rng(seed))
    return d, x_new, s.trials


def prepare_binomial(
    s: BinomialScenario,
    config: AppConfig,
    logger: Optional[FitLogger] = None,
) -> Tuple[BinomialGridFit, StudySetup]:
    """Fit the grid once and close the pipeline over x_new, the sets and the prior"""
    d, x_new, trials_new = load_binomial_data(s, s.n, s.seed)
    sets = variable_sets(d.p, s.max_set_size)
    prior = prior_matrix(s.prior, (len(s.links), len(sets)))
    fit = fit_binomial_grid(d, x_new, s.links, sets, s.target, trials_new, prior, config.fit, logger)

    def pipeline(data: Dataset, _seed: int) -> FactorTree:
        return fit_binomial_grid(data, x_new, s.links, sets, s.target, trials_new, prior, config.fit).tree

    return fit, StudySetup(d, fit.tree, pipeline)


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def run_binomial_grid_study(
    s: BinomialScenario,
    config: Optional[AppConfig] = None,
    out_dir: Optional[Path] = None,
) -> StudyResult:
    """Three-term decomposition of the grid predictive plus tests of every term"""
    config = config or AppConfig.default_for_development()
    runtime = config.runtime
    out = study_dir(out_dir or runtime.out_dir, s.name)
    trace = get_study_logger(runtime.log_dir)
    test_config = TestConfig(B=s.B, J=s.J, taus=s.taus, asl_threshold=config.test.asl_threshold, null_method=s.null_method)

    trace.log_stage("binomial.fit", "start", name=s.name, n=s.n, links=[link.value for link in s.links])
    fit, setup = prepare_binomial(s, config, get_fit_logger(runtime.log_dir))
    d = setup.data
    report = decompose_k(fit.tree)
    trace.log_result("binomial.fit", "proportions", list(report.proportions))

    table = test_all_terms(
        setup.pipeline, d, s.taus, s.B, s.J, child_seed(s.seed, 10), test_config,
        max_redraws=config.fit.max_redraws, n_jobs=runtime.threads,
        replicate_logger=get_replicate_logger(s.name, runtime.log_dir), trace_logger=trace,
        progress=runtime.progress,
    )
    report = with_diagnostics(report, fit.tree, table.trees)

    names = d.names()
    outputs: Dict[str, Path] = {f"decomposition_{k}": v for k, v in write_report(report, out).items()}
    outputs["tests"] = write_test_table(table, out / "tests.csv")
    outputs["grid"] = write_csv(out / "grid.csv", table_frame(grid_rows(fit, names), rounded={"weight": 3}))
    outputs["importance"] = write_csv(out / "importance.csv", table_frame(importance_rows(fit), rounded={"importance": 3}))
    trace.log_stage("binomial", "done", name=s.name)

    return StudyResult(
        name=s.name,
        study=s.study,
        outputs=outputs,
        summary={
            "terms": list(report.terms),
            "total": report.total,
            "z_bar": table.z_bars(),
            "asl": {
                source: {f"{tau:g}": o.asl for tau, o in zip(table.taus, table.outcomes[k])}
                for k, source in enumerate(table.sources)
            },
            "fallbacks": sum(1 for m in fit.models if m is not None and m.fallback),
            "leaf_predictive": LEAF_PREDICTIVE[fit.target],
        },
    )
