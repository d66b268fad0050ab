"""
Stacking over externally fitted learners
Learners are trained elsewhere. They hand over two files:

  out-of-fold predictions  columns model, fold, row, prediction
  held-out predictives     columns model, mean, variance

plus the training responses. Stacking weights come from the out-of-fold
matrix, each model's predictive is N(mean, variance), and the bootstrap
resamples out-of-fold rows to test the between-models share over a tau grid.
File location: ./panova/experiments/external.py
"""

# imports
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from panova.config import AppConfig, AveragingConfig, TestConfig
from panova.average.stacking import stacking_weights
from panova.core.tree import decompose_k, flatten
from panova.decompose.distribution import with_diagnostics
from panova.decompose.report import write_report
from panova.errors import InvalidInputError
from panova.experiments.reporting import StudyResult, StudySetup, study_dir, write_tau_sweep, write_test_table
from panova.experiments.scenarios import ExternalScenario
from panova.infrastructure.io import read_csv, table_frame, write_csv, write_json
from panova.infrastructure.logging import get_replicate_logger, get_study_logger
from panova.infrastructure.parallel import child_seed
from panova.intervals.coverage import held_out_coverage
from panova.intervals.interval import MIXTURE_LABEL, component_interval, per_model_table, prediction_interval
from panova.types import ComponentPredictive, Dataset, FactorTree, create_tree, gaussian
from panova.vartest.asl import tau_sweep
from panova.vartest.bootstrap import test_all_terms

OOF_COLUMNS = ("model", "fold", "row", "prediction")
HELDOUT_COLUMNS = ("model", "mean", "variance")
FACTOR_NAME = "Models"


class ExternalPredictions(NamedTuple):
    models: List[str]
    oof: Dataset
    components: List[ComponentPredictive]


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def load_external_predictions(
    oof_path: Path,
    heldout_path: Path,
    responses_path: Path,
    response: str = "y",
) -> ExternalPredictions:
    """
    Read the three files and line them up by model and row.

    Raises:
        InvalidInputError: mismatched row counts, duplicate (model, row) pairs,
            or models missing from one of the files
    """
    oof = read_csv(oof_path, required=OOF_COLUMNS)
    oof = oof.assign(model=oof["model"].astype(str))
    heldout = read_csv(heldout_path, required=HELDOUT_COLUMNS)
    y = read_csv(responses_path, required=[response])[response].to_numpy(dtype=float)

    models = list(oof["model"].unique())
    counts = oof.groupby("model", sort=False)["row"].count()
    if counts.nunique() != 1 or int(counts.iloc[0]) != y.size:
        detail = ", ".join(f"{m}: {c}" for m, c in counts.items())
        raise InvalidInputError(f"mismatched row counts: {y.size} responses; {detail}")
    if oof.duplicated(["model", "row"]).any():
        raise InvalidInputError(f"{oof_path}: duplicate (model, row) pairs")
    wide = oof.pivot(index="row", columns="model", values="prediction")
    if wide.isna().any().any() or sorted(wide.index) != list(range(y.size)):
        raise InvalidInputError(f"{oof_path}: rows must be 0..{y.size - 1} for every model")
    P = wide.sort_index()[models].to_numpy(dtype=float)

    heldout = heldout.assign(model=heldout["model"].astype(str)).set_index("model")
    missing = [m for m in models if m not in heldout.index]
    if missing or len(heldout.index) != len(models):
        raise InvalidInputError(f"held-out models {sorted(heldout.index)} do not match out-of-fold models {models}")
    components = [gaussian(heldout.at[m, "mean"], heldout.at[m, "variance"]) for m in models]
    return ExternalPredictions(models, Dataset(X=P, y=y, feature_names=tuple(models)), components)


def stacked_tree(
    oof: Dataset,
    components: List[ComponentPredictive],
    models: List[str],
    config: Optional[AveragingConfig] = None,
) -> FactorTree:
    weights = stacking_weights(oof.X, oof.y, config, models)
    return create_tree([FACTOR_NAME], [models], [list(weights.weights)], components, weight_source="stacking")


def prepare_external(s: ExternalScenario, config: AppConfig) -> Tuple[ExternalPredictions, StudySetup]:
    """(ExternalPredictions, StudySetup) with out-of-fold rows as the resampled data"""
    data = load_external_predictions(s.oof_predictions, s.heldout_predictions, s.responses, s.response)
    tree = stacked_tree(data.oof, data.components, data.models, config.averaging)

    def pipeline(resample: Dataset, _seed: int) -> FactorTree:
        return stacked_tree(resample, data.components, data.models, config.averaging)

    return data, StudySetup(data.oof, tree, pipeline)


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def run_external_stacking_study(
    s: ExternalScenario,
    config: Optional[AppConfig] = None,
    out_dir: Optional[Path] = None,
) -> StudyResult:
    """Weights, per-model table, two-term decomposition and the tau-sweep ASL table"""
    config = config or AppConfig.default_for_development()
    runtime = config.runtime
    out = study_dir(out_dir or runtime.out_dir, s.name)
    trace = get_study_logger(runtime.log_dir)
    test_config = TestConfig(B=s.B, J=s.J, taus=s.taus, asl_threshold=config.test.asl_threshold, null_method=s.null_method)

    data, setup = prepare_external(s, config)
    trace.log_stage("external.fit", "start", name=s.name, models=data.models, n=data.oof.n)
    tree = setup.tree
    report = decompose_k(tree)

    table = test_all_terms(
        setup.pipeline, data.oof, s.taus, s.B, s.J, child_seed(s.seed, 10), test_config,
        max_redraws=config.fit.max_redraws, n_jobs=runtime.threads,
        replicate_logger=get_replicate_logger(s.name, runtime.log_dir), trace_logger=trace,
        progress=runtime.progress,
    )
    report = with_diagnostics(report, tree, table.trees)
    sweep = tau_sweep(table.ratios.z[:, 0], s.taus, s.J, child_seed(s.seed, 11), test_config.asl_threshold, s.null_method)

    mixture = flatten(tree)
    coverages = None
    if s.heldout_outcomes is not None:
        outcomes = read_csv(s.heldout_outcomes, required=[s.response])[s.response].to_numpy(dtype=float)
        intervals = [prediction_interval(mixture, s.alpha, MIXTURE_LABEL)]
        intervals += [component_interval(c, s.alpha, m) for c, m in zip(data.components, data.models)]
        coverages = [held_out_coverage(pi, outcomes) for pi in intervals]
    rows = per_model_table(mixture, s.alpha, coverages)

    outputs: Dict[str, Path] = {f"decomposition_{k}": v for k, v in write_report(report, out).items()}
    outputs["models"] = write_csv(out / "models.csv", table_frame(rows, rounded={"weight": 2, "variance": 2, "coverage": 2}))
    outputs["tests"] = write_test_table(table, out / "tests.csv")
    outputs["tau_sweep"] = write_tau_sweep(sweep, out / "tau_sweep.csv")
    weights = dict(zip(data.models, (float(w) for w in np.asarray(tree.weights[0]))))
    outputs["weights"] = write_json(out / "weights.json", weights)
    trace.log_stage("external", "done", name=s.name)

    return StudyResult(
        name=s.name,
        study=s.study,
        outputs=outputs,
        summary={
            "weights": weights,
            "terms": list(report.terms),
            "total": report.total,
            "between_ratio": report.proportions[0],
            "tau_sweep": {f"{tau:g}": asl for tau, asl in zip(sweep.taus, sweep.asls)},
        },
    )
