"""
Stacking shrinkage methods on a sparse linear model
Fits each penalty on the training data, turns it into a gaussian predictive
N(x'β̂, σ̂² + Var̂(x'β̂)) at the prediction point, stacks the methods with
cross-validated weights and decomposes the stacked predictive into within
and between-methods variance. The between share is then tested at every
tau and swept over a tau grid, and each method's interval is checked for
coverage next to the stacked interval.
File location: ./panova/experiments/shrinkage.py
"""

# imports
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from panova.config import AppConfig, AveragingConfig, FitConfig, TestConfig
from panova.average.cv import cv_predictions
from panova.average.stacking import stacking_weights
from panova.core.tree import decompose_k, flatten
from panova.decompose.distribution import with_diagnostics
from panova.decompose.report import write_report
from panova.errors import ConfigError
from panova.experiments.reporting import StudyResult, StudySetup, study_dir, write_tau_sweep, write_test_table
from panova.experiments.scenarios import (
    ShrinkageScenario,
    draw_linear_outcome,
    simulate_linear_rows,
    simulate_sparse_linear,
)
from panova.fit.learners import PenalizedLearner
from panova.fit.penalized import bootstrap_pred_variance, estimate_sigma2, fit_penalized, tune_penalty
from panova.infrastructure.io import table_frame, write_csv, write_json
from panova.infrastructure.logging import get_replicate_logger, get_study_logger
from panova.infrastructure.parallel import child_seed, philox_rng
from panova.intervals.coverage import coverage_estimates, held_out_coverage, sample_mixture
from panova.intervals.interval import MIXTURE_LABEL, component_interval, per_model_table, prediction_interval
from panova.intervals.selection import select_model_list, write_selection_report
from panova.types import (
    Dataset,
    FactorTree,
    FittedModel,
    PenaltyKind,
    PenaltySpec,
    PredictionInterval,
    WeightVector,
    create_tree,
)
from panova.vartest.asl import tau_sweep
from panova.vartest.bootstrap import test_all_terms

METHOD_LABELS = {
    PenaltyKind.OLS: "OLS",
    PenaltyKind.LASSO: "LASSO",
    PenaltyKind.RIDGE: "RR",
    PenaltyKind.ALASSO: "ALASSO",
    PenaltyKind.ENET: "EN",
    PenaltyKind.AENET: "AEN",
}
SUPPORT_DONORS = (PenaltyKind.ENET, PenaltyKind.LASSO)
FACTOR_NAME = "Methods"
MAX_SEED = 2**31 - 1


class ShrinkageFit(NamedTuple):
    tree: FactorTree
    specs: List[PenaltySpec]
    models: List[FittedModel]
    pred_variances: List[float]
    weights: WeightVector


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _sigma2_support(kinds: Sequence[PenaltyKind], models: Sequence[FittedModel], j: int) -> tuple:
    """Ridge keeps every column, so it borrows the elastic-net (else lasso) support"""
    if kinds[j] is not PenaltyKind.RIDGE:
        return models[j].support
    for donor in SUPPORT_DONORS:
        if donor in kinds:
            return models[list(kinds).index(donor)].support
    return models[j].support


def fit_shrinkage_predictive(
    d: Dataset,
    x_new: np.ndarray,
    methods: Sequence[PenaltyKind],
    fit_config: FitConfig,
    averaging_config: AveragingConfig,
    folds: int,
    seed: int,
    specs: Optional[Sequence[PenaltySpec]] = None,
    pred_variances: Optional[Sequence[float]] = None,
    n_jobs: int = 1,
) -> ShrinkageFit:
    """
    One pass of the pipeline: penalties, σ̂², prediction variances, stacking.

    Passing specs and pred_variances keeps the penalties and prediction
    variances of an earlier fit fixed; bootstrap replicates do this.
    """
    kinds = list(methods)
    labels = [METHOD_LABELS[k] for k in kinds]
    if specs is None:
        specs = [tune_penalty(d, k, fit_config, child_seed(seed, 0, j)) for j, k in enumerate(kinds)]
    models = [fit_penalized(d, spec, fit_config) for spec in specs]
    sigma2 = [estimate_sigma2(d, models[j], _sigma2_support(kinds, models, j)) for j in range(len(kinds))]
    if pred_variances is None:
        pred_variances = [
            bootstrap_pred_variance(d, spec, x_new, fit_config.pred_var_bootstrap, child_seed(seed, 1, j), fit_config, n_jobs)
            for j, spec in enumerate(specs)
        ]
    models = [m.model_copy(update={"sigma2": s2}) for m, s2 in zip(models, sigma2)]
    leaves = [m.predictive(x_new, pv) for m, pv in zip(models, pred_variances)]
    learners = [PenalizedLearner(spec=spec, config=fit_config, label=label) for spec, label in zip(specs, labels)]
    P = cv_predictions(d, learners, folds, child_seed(seed, 2), n_jobs)
    weights = stacking_weights(P, d.y, averaging_config, labels)
    tree = create_tree([FACTOR_NAME], [labels], [list(weights.weights)], leaves, weight_source="stacking")
    return ShrinkageFit(tree, list(specs), models, list(pred_variances), weights)


def single_level_tree(tree: FactorTree, j: int) -> FactorTree:
    """The model list reduced to level j alone"""
    return create_tree(tree.factors, [[tree.levels[0][j]]], [[1.0]], [tree.leaves[j]], weight_source="fixed")


def shrinkage_fit_config(s: ShrinkageScenario, config: AppConfig) -> FitConfig:
    return config.fit.model_copy(
        update={"cv_folds": s.folds, "enet_alpha": s.enet_alpha, "pred_var_bootstrap": s.pred_var_B}
    )


def load_shrinkage_data(s: ShrinkageScenario) -> Tuple[Dataset, np.ndarray, Optional[np.ndarray]]:
    """(data, x_new, beta); beta is None for data read from CSV"""
    if s.data is not None:
        d, x_new = s.data.load()
        return d, x_new, None
    return simulate_sparse_linear(s, philox_rng(s.seed))


def prepare_shrinkage(
    s: ShrinkageScenario,
    config: AppConfig,
    d: Dataset,
    x_new: np.ndarray,
) -> Tuple[ShrinkageFit, StudySetup]:
    """
    Base fit plus the pipeline the bootstrap reruns; replicates keep the base
    penalties and prediction variances and refit coefficients, σ̂² and weights.
    """
    fit_config = shrinkage_fit_config(s, config)
    threads = config.runtime.threads
    base = fit_shrinkage_predictive(d, x_new, s.methods, fit_config, config.averaging, s.folds, s.seed, n_jobs=threads)

    def pipeline(data: Dataset, replicate_seed: int) -> FactorTree:
        return fit_shrinkage_predictive(
            data, x_new, s.methods, fit_config, config.averaging, s.folds, replicate_seed,
            specs=base.specs, pred_variances=base.pred_variances,
        ).tree

    return base, StudySetup(d, base.tree, pipeline)


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def run_shrinkage_study(
    s: ShrinkageScenario,
    config: Optional[AppConfig] = None,
    out_dir: Optional[Path] = None,
) -> StudyResult:
    """
    Stacking weights, per-method variances and coverages, two-term
    decomposition, tests of the between-methods share and a tau sweep.
    """
    config = config or AppConfig.default_for_development()
    runtime = config.runtime
    out = study_dir(out_dir or runtime.out_dir, s.name)
    trace = get_study_logger(runtime.log_dir)
    replicate_log = get_replicate_logger(s.name, runtime.log_dir)
    fit_config = shrinkage_fit_config(s, config)
    test_config = TestConfig(B=s.B, J=s.J, taus=s.taus, asl_threshold=config.test.asl_threshold, null_method=s.null_method)

    d, x_new, beta = load_shrinkage_data(s)
    if s.coverage_mode == "generator" and beta is None:
        raise ConfigError("coverage_mode 'generator' needs simulated data")

    trace.log_stage("shrinkage.fit", "start", name=s.name, n=d.n, p=d.p)
    base, setup = prepare_shrinkage(s, config, d, x_new)
    trace.log_result("shrinkage.fit", "weights", dict(zip(base.tree.levels[0], base.weights.weights)))

    # decomposition and tests
    report = decompose_k(base.tree)

    trace.log_stage("shrinkage.test", "start", B=s.B, J=s.J)
    table = test_all_terms(
        setup.pipeline, d, s.taus, s.B, s.J, child_seed(s.seed, 10), test_config,
        max_redraws=fit_config.max_redraws, n_jobs=runtime.threads,
        replicate_logger=replicate_log, trace_logger=trace, progress=runtime.progress,
    )
    report = with_diagnostics(report, base.tree, table.trees)
    sweep = tau_sweep(
        table.ratios.z[:, 0], s.sweep_taus, s.J, child_seed(s.seed, 11), test_config.asl_threshold, s.null_method
    )
    trace.log_result("shrinkage.test", "tau_crossing", sweep.crossing)

    # intervals and coverage
    mixture = flatten(base.tree)
    eval_rng = philox_rng(child_seed(s.seed, 12))
    if s.coverage_mode == "generator":
        outcomes = draw_linear_outcome(s, x_new, beta, eval_rng, size=s.eval_draws)
    else:
        outcomes = sample_mixture(mixture, s.eval_draws, eval_rng)
    intervals = [prediction_interval(mixture, s.alpha, MIXTURE_LABEL)]
    intervals += [component_interval(c, s.alpha, label) for c, label in zip(mixture.components, base.tree.levels[0])]
    coverages = [held_out_coverage(pi, outcomes) for pi in intervals]

    bootstrap_coverages: Optional[List[float]] = None
    if s.coverage_B > 0 and beta is not None:
        bootstrap_coverages = _procedure_coverage(
            s, beta, x_new, base, fit_config, config.averaging, runtime.threads, runtime.progress
        )

    rows = per_model_table(mixture, s.alpha, coverages)
    if bootstrap_coverages is not None:
        for row, cov in zip(rows, bootstrap_coverages):
            row["bootstrap_coverage"] = cov

    candidates = [base.tree] + [single_level_tree(base.tree, j) for j in range(len(s.methods))]
    selection = select_model_list(
        candidates, s.alpha, s.delta, coverages=bootstrap_coverages or coverages,
        labels=[MIXTURE_LABEL] + list(base.tree.levels[0]),
    )

    outputs: Dict[str, Path] = {}
    outputs.update({f"decomposition_{k}": v for k, v in write_report(report, out).items()})
    outputs["methods"] = write_csv(
        out / "methods.csv",
        table_frame(rows, rounded={"weight": 2, "variance": 2, "coverage": 2}),
    )
    outputs["tests"] = write_test_table(table, out / "tests.csv")
    outputs["tau_sweep"] = write_tau_sweep(sweep, out / "tau_sweep.csv")
    outputs["selection"] = write_selection_report(selection, out / "selection.csv")
    outputs["weights"] = write_json(out / "weights.json", base.weights.model_dump())
    trace.log_stage("shrinkage", "done", name=s.name)

    within, between = report.terms[1], report.terms[0]
    return StudyResult(
        name=s.name,
        study=s.study,
        outputs=outputs,
        summary={
            "weights": list(base.weights.weights),
            "within": within,
            "between": between,
            "total": report.total,
            "between_ratio": report.proportions[0],
            "asl": {f"{tau:g}": o.asl for tau, o in zip(table.taus, table.outcomes[0])},
            "tau_crossing": sweep.crossing,
            "coverages": dict(zip([MIXTURE_LABEL] + list(base.tree.levels[0]), coverages)),
            "selected": selection.labels[selection.index],
            "selection_flag": selection.flag,
        },
    )


def _procedure_coverage(
    s: ShrinkageScenario,
    beta: np.ndarray,
    x_new: np.ndarray,
    base: ShrinkageFit,
    fit_config: FitConfig,
    averaging_config: AveragingConfig,
    n_jobs: int,
    progress: bool,
) -> List[float]:
    """
    Coverage of the stacked and per-method intervals at x_new over coverage_B
    fresh training sets from the generator, with penalties and prediction
    variances held at the base fit.
    """

    def build(rng: np.random.Generator) -> List[PredictionInterval]:
        d, _ = simulate_linear_rows(s, beta, rng)
        fitted = fit_shrinkage_predictive(
            d, x_new, s.methods, fit_config, averaging_config, s.folds, int(rng.integers(0, MAX_SEED)),
            specs=base.specs, pred_variances=base.pred_variances,
        )
        mixture = flatten(fitted.tree)
        return [prediction_interval(mixture, s.alpha)] + [component_interval(c, s.alpha) for c in mixture.components]

    def draw(rng: np.random.Generator) -> float:
        return float(draw_linear_outcome(s, x_new, beta, rng))

    return coverage_estimates(build, draw, s.coverage_B, child_seed(s.seed, 13), n_jobs=n_jobs, progress=progress)
