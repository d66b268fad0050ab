"""
Tests for the candidate predictors: penalized regression, binomial GLMs,
link functions, model grids and fold assignment.

Running Tests:
    pytest tests/test_fit.py -v
"""
import numpy as np
import pytest

from panova.config import FitConfig
from panova.errors import InvalidInputError, NumericalError
from panova.fit.dataset import fold_assignment, load_dataset
from panova.fit.glm import fit_glm_binomial, fit_glm_with_fallback
from panova.fit.grid import model_grid, variable_sets
from panova.fit.learners import GLMLearner, Learner, PenalizedLearner
from panova.fit.links import inverse_link, link_function, mu_eta
from panova.fit.penalized import (
    bootstrap_pred_variance,
    coordinate_descent,
    estimate_sigma2,
    fit_ols,
    fit_penalized,
    kkt_residual,
    lambda_grid,
    standardize,
    tune_penalty,
)
from panova.infrastructure.logging import FitLogger
from panova.types import Dataset, Family, Link, PenaltyKind, PenaltySpec

# ──────────────────────────────────────────────────────────────────────────────
# Links
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("link", list(Link))
def test_links_invert(link):
    mu = np.linspace(0.01, 0.99, 25)
    assert inverse_link(link, link_function(link, mu)) == pytest.approx(mu, abs=1e-12)


@pytest.mark.parametrize("link", list(Link))
def test_mu_eta_matches_finite_difference(link):
    eta = np.linspace(-3, 3, 13)
    h = 1e-6
    numeric = (inverse_link(link, eta + h) - inverse_link(link, eta - h)) / (2 * h)
    assert mu_eta(link, eta) == pytest.approx(numeric, rel=1e-5, abs=1e-9)


# ──────────────────────────────────────────────────────────────────────────────
# Penalized regression
# ──────────────────────────────────────────────────────────────────────────────

def test_ridge_without_penalty_is_ols(linear_data):
    ols = fit_ols(linear_data)
    ridge = fit_penalized(linear_data, PenaltySpec(kind=PenaltyKind.RIDGE, lambda_=0.0))
    assert ridge.beta == pytest.approx(ols.beta, abs=1e-8)


def test_large_lambda_zeroes_every_coefficient(linear_data):
    grid = lambda_grid(linear_data, PenaltySpec(kind=PenaltyKind.LASSO), FitConfig())
    m = fit_penalized(linear_data, PenaltySpec(kind=PenaltyKind.LASSO, lambda_=grid[0] * 1.01))
    assert m.support == ()
    assert m.beta[0] == pytest.approx(float(linear_data.y.mean()))


@pytest.mark.parametrize("kind", [PenaltyKind.LASSO, PenaltyKind.ENET])
def test_coordinate_descent_meets_optimality_conditions(linear_data, kind):
    spec = PenaltySpec(kind=kind, lambda_=2.0)
    config = FitConfig()
    m = fit_penalized(linear_data, spec, config)
    std = standardize(linear_data.X, linear_data.y)
    b = (m.beta[1:] * std.x_scale)
    G = std.Z.T @ std.Z
    c = std.Z.T @ std.y
    residual = kkt_residual(G, c, b, 2.0, spec.mixing(config.enet_alpha), np.ones(linear_data.p))
    assert np.max(residual) <= config.cd_kkt_tol


def test_loose_sweep_tolerance_fails_the_kkt_check():
    G = np.array([[1.0, 0.9], [0.9, 1.0]])
    c = np.array([1.0, 0.95])
    with pytest.raises(NumericalError, match="KKT residual") as info:
        coordinate_descent(G, c, 0.01, 1.0, np.ones(2), tol=1.0)
    assert info.value.trace[0]["sweeps"] == 1
    assert info.value.trace[0]["kkt_residual"] > 1e-7


def test_lasso_finds_the_active_columns(linear_data):
    spec = tune_penalty(linear_data, PenaltyKind.LASSO, FitConfig(), seed=3)
    m = fit_penalized(linear_data, spec)
    assert {0, 2} <= set(m.support)


def test_adaptive_penalty_needs_weights(linear_data):
    with pytest.raises(InvalidInputError, match="adaptive_weights"):
        fit_penalized(linear_data, PenaltySpec(kind=PenaltyKind.ALASSO, lambda_=1.0))


def test_tune_adaptive_lasso_sets_weights(linear_data):
    spec = tune_penalty(linear_data, PenaltyKind.ALASSO, FitConfig(lambda_grid_size=20), seed=1)
    assert spec.adaptive_weights is not None and len(spec.adaptive_weights) == linear_data.p
    assert spec.lambda_ > 0.0


def test_negative_lambda_is_rejected():
    with pytest.raises(InvalidInputError):
        PenaltySpec(kind=PenaltyKind.LASSO, lambda_=-1.0)


def test_ols_underdetermined(rng):
    d = Dataset(X=rng.standard_normal((5, 8)), y=rng.standard_normal(5))
    with pytest.raises(NumericalError, match="OLS underdetermined"):
        fit_ols(d)


def test_sigma2_on_true_support_is_close_to_noise(linear_data):
    m = fit_ols(linear_data)
    sigma2 = estimate_sigma2(linear_data, m, support=(0, 2))
    assert 0.1 < sigma2 < 0.5


def test_saturated_support(rng):
    d = Dataset(X=rng.standard_normal((6, 5)), y=rng.standard_normal(6))
    with pytest.raises(NumericalError, match="saturated support"):
        estimate_sigma2(d, fit_ols(d))


def test_prediction_variance_is_positive_and_seeded(linear_data):
    spec = PenaltySpec(kind=PenaltyKind.RIDGE, lambda_=1.0)
    x_new = np.ones(linear_data.p)
    first = bootstrap_pred_variance(linear_data, spec, x_new, B=50, seed=11)
    second = bootstrap_pred_variance(linear_data, spec, x_new, B=50, seed=11)
    assert first > 0.0
    assert first == second


def test_linear_predictive_adds_prediction_variance(linear_data):
    m = fit_ols(linear_data).model_copy(update={"sigma2": 0.25})
    c = m.predictive(np.zeros(linear_data.p), pred_variance=0.05)
    assert c.family is Family.GAUSSIAN
    assert c.variance == pytest.approx(0.30)
    assert c.mean == pytest.approx(m.beta[0])


# ──────────────────────────────────────────────────────────────────────────────
# Binomial GLMs
# ──────────────────────────────────────────────────────────────────────────────

def test_logit_recovers_coefficients(binomial_data):
    m = fit_glm_binomial(binomial_data, Link.LOGIT, (0, 1))
    assert m.converged
    assert m.beta == pytest.approx([0.2, 0.75, -0.5], abs=0.1)
    assert m.cov.shape == (3, 3)
    assert m.loglik < 0.0


def test_intercept_only_model_uses_pooled_proportion(binomial_data):
    m = fit_glm_binomial(binomial_data, Link.PROBIT, ())
    pooled = binomial_data.y.sum() / binomial_data.trials.sum()
    assert m.predict(np.zeros(2)) == pytest.approx(pooled)
    assert m.n_params == 1


def test_count_predictive_is_binomial(binomial_data):
    m = fit_glm_binomial(binomial_data, Link.CLOGLOG, (0,))
    c = m.predictive(np.array([0.5, 0.0]), target="count", trials=30)
    assert c.family is Family.BINOMIAL
    assert c.trials == 30
    assert c.mean == pytest.approx(30 * m.predict(np.array([0.5, 0.0])))
    assert c.variance == pytest.approx(30 * c.success_prob * (1.0 - c.success_prob), abs=1e-12)
    assert m.probability_variance(np.array([0.5, 0.0])) > 0.0


def test_probability_predictive_uses_delta_method(binomial_data):
    m = fit_glm_binomial(binomial_data, Link.LOGIT, (0,))
    c = m.predictive(np.array([0.5, 0.0]), target="probability")
    assert c.family is Family.GAUSSIAN
    assert 0.0 < c.variance < 0.01


def _separated(n=20):
    x = np.linspace(-1, 1, n)
    y = np.where(x > 0, 10, 0)
    return Dataset(X=x.reshape(-1, 1), y=y, trials=np.full(n, 10))


def test_separation_raises_then_falls_back(tmp_path):
    d = _separated()
    with pytest.raises(NumericalError, match="IRLS diverged"):
        fit_glm_binomial(d, Link.LOGIT, (0,))
    logger = FitLogger(tmp_path)
    m = fit_glm_with_fallback(d, Link.LOGIT, (0,), logger=logger)
    assert m.fallback
    assert np.all(np.isfinite(m.beta))
    assert logger.read()[0]["status"] == "fallback"


def test_glm_needs_trials(linear_data):
    with pytest.raises(InvalidInputError, match="trials"):
        fit_glm_binomial(linear_data, Link.LOGIT, (0,))


# ──────────────────────────────────────────────────────────────────────────────
# Grids, learners and data
# ──────────────────────────────────────────────────────────────────────────────

def test_variable_sets_order():
    assert variable_sets(3) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2), ()]
    assert variable_sets(3, max_size=1) == [(0,), (1,), (2,), ()]


def test_model_grid_is_links_outer(all_links):
    grid = model_grid(all_links, variable_sets(2))
    assert len(grid) == 3 * 4
    assert grid[4].link is Link.CLOGLOG and grid[4].variables == (0,)
    assert grid[0].label(("t", "s")) == "m1: logit(t)"
    assert grid[3].label(("t", "s")) == "m4: logit(no effect)"


def test_learners_follow_the_protocol(binomial_data):
    pen = PenalizedLearner(spec=PenaltySpec(kind=PenaltyKind.RIDGE, lambda_=1.0), label="RR")
    glm = GLMLearner(link=Link.LOGIT, variables=(0,))
    assert isinstance(pen, Learner) and isinstance(glm, Learner)
    assert pen.name == "RR"
    assert glm.fit(binomial_data).link is Link.LOGIT


def test_fold_assignment_is_balanced_and_seeded():
    labels = fold_assignment(23, 5, seed=4)
    assert sorted(np.bincount(labels)) == [4, 4, 5, 5, 5]
    assert np.array_equal(labels, fold_assignment(23, 5, seed=4))
    with pytest.raises(InvalidInputError):
        fold_assignment(3, 5, seed=0)


def test_load_dataset(tmp_path):
    path = tmp_path / "orings.csv"
    path.write_text("t,s,damaged,trials\n53,50,2,6\n57,50,1,6\n58,200,1,6\n63,50,1,6\n")
    d = load_dataset(path, "damaged", trials="trials")
    assert d.names() == ("t", "s")
    assert d.is_binomial and d.n == 4


def test_load_dataset_reports_missing_values(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n,3\n")
    with pytest.raises(InvalidInputError, match="line"):
        load_dataset(path, "y")
