"""
Tests for scenario parsing, the four studies and the runner facade.
Studies run at toy sizes; the full-size runs are marked slow.

Running Tests:
    pytest tests/test_experiments.py -v
    pytest tests/test_experiments.py -v -m slow    # full-size studies
"""
import math

import numpy as np
import pandas as pd
import pytest

from panova.errors import ConfigError, InvalidInputError
from panova.experiments.binomial import run_binomial_grid_study
from panova.experiments.external import load_external_predictions, run_external_stacking_study
from panova.experiments.runner import StudyRunner
from panova.experiments.scenarios import parse_scenario, simulate_binomial, simulate_sparse_linear
from panova.experiments.shrinkage import run_shrinkage_study
from panova.experiments.sweep import run_n_sweep
from panova.infrastructure.io import read_json
from panova.infrastructure.parallel import philox_rng

TINY_BINOMIAL = {
    "study": "binomial",
    "name": "tiny-binomial",
    "seed": 11,
    "n": 40,
    "beta": [0.75, -0.5],
    "max_set_size": 1,
    "B": 10,
    "J": 1000,
    "taus": [0.05, 0.1],
}

TINY_SHRINKAGE = {
    "study": "shrinkage",
    "name": "tiny-shrinkage",
    "seed": 5,
    "n": 30,
    "p": 6,
    "n_nonzero": 2,
    "folds": 3,
    "B": 10,
    "J": 1000,
    "taus": [0.05],
    "pred_var_B": 50,
    "eval_draws": 10000,
    "sweep_taus": [0.01, 0.05, 0.1],
}


def _external_files(tmp_path, rng, n=30, drop_row=False):
    y = rng.normal(5.0, 1.0, n)
    rows = []
    for model, noise in (("gbm", 0.2), ("forest", 0.6)):
        for i in range(n):
            if drop_row and model == "forest" and i == n - 1:
                continue
            rows.append({"model": model, "fold": i % 3, "row": i, "prediction": y[i] + noise * rng.standard_normal()})
    pd.DataFrame(rows).to_csv(tmp_path / "oof.csv", index=False)
    pd.DataFrame({"y": y}).to_csv(tmp_path / "y.csv", index=False)
    pd.DataFrame({"model": ["gbm", "forest"], "mean": [5.1, 4.6], "variance": [0.5, 0.9]}).to_csv(
        tmp_path / "heldout.csv", index=False
    )
    pd.DataFrame({"y": rng.normal(5.0, 1.0, 200)}).to_csv(tmp_path / "outcomes.csv", index=False)
    return {
        "study": "external",
        "name": "tiny-external",
        "responses": str(tmp_path / "y.csv"),
        "oof_predictions": str(tmp_path / "oof.csv"),
        "heldout_predictions": str(tmp_path / "heldout.csv"),
        "heldout_outcomes": str(tmp_path / "outcomes.csv"),
        "B": 10,
        "J": 1000,
        "taus": [0.05, 0.1, 0.2],
    }


# ──────────────────────────────────────────────────────────────────────────────
# Scenarios
# ──────────────────────────────────────────────────────────────────────────────

def test_unknown_study_lists_the_available_ones():
    with pytest.raises(ConfigError, match="available: shrinkage, binomial, n_sweep, external"):
        parse_scenario({"study": "bagging", "name": "x"})


@pytest.mark.parametrize(
    "overrides",
    [
        {"coverage_B": 50},
        {"n_nonzero": 7},
        {"taus": [0.05, 1.0]},
        {"J": 500},
        {"unexpected": 1},
    ],
)
def test_invalid_shrinkage_scenarios(overrides):
    with pytest.raises(ConfigError):
        parse_scenario({**TINY_SHRINKAGE, **overrides})


def test_sweep_needs_ascending_sizes():
    with pytest.raises(ConfigError, match="ascending"):
        parse_scenario({**TINY_BINOMIAL, "study": "n_sweep", "n_list": [40, 20]})


def test_external_paths_must_exist(tmp_path):
    with pytest.raises(ConfigError, match="file not found"):
        parse_scenario(
            {
                "study": "external",
                "name": "x",
                "responses": str(tmp_path / "y.csv"),
                "oof_predictions": str(tmp_path / "oof.csv"),
                "heldout_predictions": str(tmp_path / "h.csv"),
            }
        )


def test_generators_are_seeded():
    s = parse_scenario(TINY_SHRINKAGE)
    d1, x1, beta1 = simulate_sparse_linear(s, philox_rng(3))
    d2, x2, beta2 = simulate_sparse_linear(s, philox_rng(3))
    assert np.array_equal(d1.y, d2.y) and np.array_equal(x1, x2)
    assert np.count_nonzero(beta1) == 2 and np.array_equal(beta1, beta2)
    b = parse_scenario(TINY_BINOMIAL)
    d, x_new = simulate_binomial(b, 25, philox_rng(3))
    assert d.n == 25 and x_new.shape == (2,)
    assert np.all(d.trials == 30)


# ──────────────────────────────────────────────────────────────────────────────
# Studies
# ──────────────────────────────────────────────────────────────────────────────

def test_binomial_study(app_config):
    result = run_binomial_grid_study(parse_scenario(TINY_BINOMIAL), app_config)
    terms = result.summary["terms"]
    assert len(terms) == 3
    assert math.fsum(terms) == pytest.approx(result.summary["total"], rel=1e-9)
    assert set(result.summary["asl"]) == {"Links", "Models", "Predictions"}
    grid = pd.read_csv(result.outputs["grid"])
    assert len(grid) == 9
    assert grid["weight"].sum() == pytest.approx(1.0)
    importance = pd.read_csv(result.outputs["importance"])
    assert set(importance["factor"]) == {"Links", "Models"}
    tests = pd.read_csv(result.outputs["tests"])
    assert len(tests) == 3 * 2
    assert (grid["predictive"] == "plug-in binomial (p_hat variance not included)").all()
    assert result.summary["leaf_predictive"].startswith("plug-in binomial")


def test_binomial_probability_target_is_labelled_delta_method(app_config):
    result = run_binomial_grid_study(parse_scenario({**TINY_BINOMIAL, "target": "probability"}), app_config)
    grid = pd.read_csv(result.outputs["grid"])
    assert grid["predictive"].str.contains("delta-method").all()


def test_binomial_study_with_zero_prior_link(app_config):
    prior = [[1, 1, 1], [1, 1, 1], [0, 0, 0]]
    result = run_binomial_grid_study(parse_scenario({**TINY_BINOMIAL, "prior": prior}), app_config)
    grid = pd.read_csv(result.outputs["grid"])
    probit = grid[grid["link"] == "probit"]
    assert not probit["fitted"].any()
    assert (probit["weight"] == 0.0).all()


def test_binomial_prior_shape_is_checked(app_config):
    with pytest.raises(ConfigError, match="prior has shape"):
        run_binomial_grid_study(parse_scenario({**TINY_BINOMIAL, "prior": [[1, 1]]}), app_config)


def test_binomial_study_from_csv(app_config, tmp_path, binomial_data):
    frame = pd.DataFrame(binomial_data.X, columns=["t", "s"]).assign(
        damaged=binomial_data.y.astype(int), trials=binomial_data.trials.astype(int)
    )
    frame.to_csv(tmp_path / "data.csv", index=False)
    data = {"path": str(tmp_path / "data.csv"), "response": "damaged", "trials": "trials", "x_new": [0.5, -0.2]}
    with pytest.raises(ConfigError, match="trials_new"):
        run_binomial_grid_study(parse_scenario({**TINY_BINOMIAL, "data": data}), app_config)
    result = run_binomial_grid_study(parse_scenario({**TINY_BINOMIAL, "data": {**data, "trials_new": 6}}), app_config)
    grid = pd.read_csv(result.outputs["grid"])
    assert grid["model"].iloc[0] == "m1: logit(t)"


def test_external_study(app_config, tmp_path, rng):
    scenario = parse_scenario(_external_files(tmp_path, rng))
    result = run_external_stacking_study(scenario, app_config)
    weights = read_json(result.outputs["weights"])
    assert set(weights) == {"gbm", "forest"}
    assert sum(weights.values()) == pytest.approx(1.0)
    assert weights["gbm"] > weights["forest"]
    assert 0.0 <= result.summary["between_ratio"] <= 1.0
    models = pd.read_csv(result.outputs["models"])
    assert models["candidate"].tolist() == ["STK avg", "gbm", "forest"]
    assert models["coverage"].between(0.0, 1.0).all()
    sweep = pd.read_csv(result.outputs["tau_sweep"])
    assert sweep["tau"].tolist() == [0.05, 0.1, 0.2]


def test_external_row_counts_must_match(tmp_path, rng):
    _external_files(tmp_path, rng, drop_row=True)
    with pytest.raises(InvalidInputError, match="mismatched row counts"):
        load_external_predictions(tmp_path / "oof.csv", tmp_path / "heldout.csv", tmp_path / "y.csv")


def test_sweep_without_tests(app_config):
    scenario = parse_scenario({**TINY_BINOMIAL, "study": "n_sweep", "name": "tiny-sweep", "n_list": [20, 40], "run_tests": False})
    result = run_n_sweep(scenario, app_config)
    assert "tests" not in result.outputs
    curve = pd.read_csv(result.outputs["curve_proportion"])
    assert curve["n"].tolist() == [20, 40]
    assert (curve[["links", "models", "predictions"]].sum(axis=1)).to_numpy() == pytest.approx([1.0, 1.0])
    assert set(result.summary["medians"]) == {"20", "40"}


def test_sweep_with_tests(app_config):
    scenario = parse_scenario({**TINY_BINOMIAL, "study": "n_sweep", "name": "tiny-sweep", "n_list": [30]})
    result = run_n_sweep(scenario, app_config)
    tests = pd.read_csv(result.outputs["tests"])
    assert list(tests.columns[:5]) == ["n", "replicate", "Predictions", "Models", "Links"]


def test_shrinkage_study(app_config):
    result = run_shrinkage_study(parse_scenario(TINY_SHRINKAGE), app_config)
    summary = result.summary
    assert len(summary["weights"]) == 5
    assert sum(summary["weights"]) == pytest.approx(1.0)
    assert summary["within"] + summary["between"] == pytest.approx(summary["total"], rel=1e-9)
    assert set(summary["coverages"]) == {"STK avg", "LASSO", "RR", "ALASSO", "EN", "AEN"}
    assert summary["selected"] in summary["coverages"]
    methods = pd.read_csv(result.outputs["methods"])
    assert methods["candidate"].iloc[0] == "STK avg"
    assert (result.outputs["selection"]).exists()


# ──────────────────────────────────────────────────────────────────────────────
# Runner
# ──────────────────────────────────────────────────────────────────────────────

def test_runner_writes_manifest(app_config):
    result = StudyRunner(app_config).run(parse_scenario(TINY_BINOMIAL))
    manifest = read_json(result.outputs["manifest"])
    assert manifest["study"] == "binomial"
    assert manifest["seed"] == 11
    assert manifest["scenario"]["n"] == 40
    assert "numpy" in manifest["versions"]
    assert manifest["runtimes"]["seconds"] >= 0.0


def test_runs_are_reproducible(app_config, tmp_path):
    runner = StudyRunner(app_config)
    first = runner.run(parse_scenario(TINY_BINOMIAL), tmp_path / "a")
    second = runner.run(parse_scenario(TINY_BINOMIAL), tmp_path / "b")
    assert first.summary == second.summary
    assert (tmp_path / "a" / "tiny-binomial" / "tests.csv").read_text() == (
        tmp_path / "b" / "tiny-binomial" / "tests.csv"
    ).read_text()


def test_runner_test_and_prepare(app_config):
    runner = StudyRunner(app_config)
    table = runner.test(parse_scenario(TINY_BINOMIAL), taus=[0.1], B=5, J=1000)
    assert table.sources == ["Links", "Models", "Predictions"]
    assert table.taus == [0.1]
    with pytest.raises(ConfigError, match="no single fitted tree"):
        runner.prepare(parse_scenario({**TINY_BINOMIAL, "study": "n_sweep"}))


# ──────────────────────────────────────────────────────────────────────────────
# Full-size studies
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.slow
def test_default_binomial_study(app_config):
    result = run_binomial_grid_study(parse_scenario({"study": "binomial", "name": "binomial", "seed": 1}), app_config)
    assert math.fsum(result.summary["terms"]) == pytest.approx(result.summary["total"], rel=1e-9)
    # the predictions term dominates a well-specified grid
    assert result.summary["asl"]["Predictions"]["0.05"] >= 0.05


@pytest.mark.slow
def test_default_shrinkage_study(app_config):
    scenario = parse_scenario({"study": "shrinkage", "name": "shrinkage", "seed": 1, "coverage_B": 100})
    result = run_shrinkage_study(scenario, app_config)
    assert result.summary["between_ratio"] < 0.5
    assert abs(result.summary["coverages"]["STK avg"] - 0.95) < 0.05
