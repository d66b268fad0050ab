"""
Tests for the bootstrap ASL test, tau sweeps and the shared-replicate
term test table.

Running Tests:
    pytest tests/test_vartest.py -v
"""
import numpy as np
import pytest

from panova.errors import InvalidInputError, NumericalError, ReplicateError
from panova.infrastructure.logging import ReplicateLogger
from panova.infrastructure.parallel import philox_rng
from panova.types import create_tree, gaussian
from panova.vartest.asl import asl_test, tau_sweep
from panova.vartest.bootstrap import (
    bootstrap_ratio_samples,
    bootstrap_trees,
    format_cell,
    ratio_matrix,
    table_row,
    test_all_terms,
)


def _ratios(rng, mean, sd, B=100):
    return np.clip(mean + sd * rng.standard_normal(B), 0.0, 1.0)


def _mean_median_pipeline(d, seed):
    """Two location estimates of y, each with the sample variance as predictive variance"""
    v = float(np.var(d.y, ddof=1))
    return create_tree(
        ["Models"],
        [["mean", "median"]],
        [[0.5, 0.5]],
        [gaussian(float(d.y.mean()), v), gaussian(float(np.median(d.y)), v)],
    )


# ──────────────────────────────────────────────────────────────────────────────
# ASL
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("null_method", ["shift", "literal"])
def test_large_share_is_retained(rng, null_method):
    outcome = asl_test(_ratios(rng, 0.66, 0.02), tau=0.05, J=2000, seed=5, null_method=null_method)
    assert outcome.asl == 1.0
    assert not outcome.rejects(0.05)
    assert outcome.reject_at == {"0.01": False, "0.05": False, "0.1": False}


@pytest.mark.parametrize("null_method", ["shift", "literal"])
def test_small_share_is_rejected(rng, null_method):
    outcome = asl_test(_ratios(rng, 0.041, 0.005), tau=0.05, J=2000, seed=5, null_method=null_method)
    assert outcome.asl < 0.05
    assert outcome.reject_at["0.05"]
    assert outcome.t_stat < 0.0


def test_all_zero_ratios_are_a_degenerate_reject():
    outcome = asl_test(np.zeros(100), tau=0.05, J=1000)
    assert outcome.degenerate
    assert outcome.asl == 0.0
    assert outcome.rejects()
    assert outcome.t_stat == -np.inf


def test_constant_large_ratios_are_retained():
    outcome = asl_test(np.full(50, 0.5), tau=0.05, J=1000)
    assert outcome.degenerate and outcome.asl == 1.0


def test_asl_is_seeded(rng):
    z = _ratios(rng, 0.06, 0.03)
    assert asl_test(z, 0.05, 1000, seed=9).asl == asl_test(z, 0.05, 1000, seed=9).asl


def test_shift_null_is_centred(rng):
    z = _ratios(rng, 0.3, 0.1)
    outcome = asl_test(z, tau=float(z.mean()), J=5000, seed=2)
    assert outcome.asl == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"tau": 0.05, "J": 999}, "J must be"),
        ({"tau": 1.0, "J": 1000}, "tau must lie"),
        ({"tau": 0.0, "J": 1000}, "tau must lie"),
    ],
)
def test_invalid_arguments(rng, kwargs, message):
    with pytest.raises(InvalidInputError, match=message):
        asl_test(_ratios(rng, 0.2, 0.05), **kwargs)


def test_single_sample_is_rejected():
    with pytest.raises(InvalidInputError, match="B >= 2"):
        asl_test([0.3], tau=0.05, J=1000)


def test_tau_sweep_is_monotone(rng):
    z = _ratios(rng, 0.12, 0.06)
    sweep = tau_sweep(z, [0.2, 0.05, 0.1, 0.15, 0.01], J=2000, seed=4)
    assert sweep.taus == [0.01, 0.05, 0.1, 0.15, 0.2]
    assert all(a >= b for a, b in zip(sweep.asls, sweep.asls[1:]))
    assert sweep.crossing is not None
    first = sweep.taus.index(sweep.crossing)
    assert sweep.asls[first] < 0.05
    assert all(a >= 0.05 for a in sweep.asls[:first])


def test_tau_sweep_without_rejection(rng):
    sweep = tau_sweep(_ratios(rng, 0.8, 0.02), [0.05, 0.1], J=1000)
    assert sweep.crossing is None


def test_asl_is_monotone_over_random_tau_grids():
    rng = philox_rng(21)
    for _ in range(20):
        z = _ratios(rng, rng.uniform(0.05, 0.6), rng.uniform(0.01, 0.2), B=int(rng.integers(10, 120)))
        taus = rng.uniform(0.01, 0.99, size=6)
        sweep = tau_sweep(z, taus, J=1000, seed=int(rng.integers(0, 2**31)))
        assert all(a >= b for a, b in zip(sweep.asls, sweep.asls[1:]))


@pytest.mark.slow
def test_rejection_rate_at_the_boundary_is_nominal():
    rng = philox_rng(22)
    trials = 500
    rejected = 0
    for trial in range(trials):
        z = rng.beta(10.0, 90.0, size=200)
        rejected += asl_test(z, 0.1, J=10_000, seed=trial).rejects(0.05)
    assert 0.03 <= rejected / trials <= 0.08


# ──────────────────────────────────────────────────────────────────────────────
# Replicates and the term table
# ──────────────────────────────────────────────────────────────────────────────

def test_bootstrap_trees_are_seeded(linear_data):
    first = bootstrap_trees(_mean_median_pipeline, linear_data, B=8, seed=21)
    second = bootstrap_trees(_mean_median_pipeline, linear_data, B=8, seed=21)
    assert len(first) == 8
    assert [t.leaf_means().tolist() for t in first] == [t.leaf_means().tolist() for t in second]


def test_ratio_rows_sum_to_one(linear_data):
    ratios = ratio_matrix(bootstrap_trees(_mean_median_pipeline, linear_data, B=10, seed=1))
    assert ratios.z.shape == (10, 2)
    assert ratios.z.sum(axis=1) == pytest.approx(np.ones(10))
    assert ratios.flagged == []


def test_ratio_samples_need_fifty_replicates(linear_data):
    with pytest.raises(InvalidInputError, match="B >= 50"):
        bootstrap_ratio_samples(_mean_median_pipeline, linear_data, term_index=0, B=20, seed=0)


def test_failing_pipeline_raises_after_redraws(linear_data, tmp_path):
    def broken(d, seed):
        raise NumericalError("IRLS diverged")

    logger = ReplicateLogger("broken", tmp_path)
    with pytest.raises(ReplicateError) as info:
        bootstrap_trees(broken, linear_data, B=3, seed=0, max_redraws=2, logger=logger)
    assert len(info.value.replicate_log) == 2
    assert logger.read()[0]["status"] == "failed"


def test_all_terms_table(linear_data):
    table = test_all_terms(_mean_median_pipeline, linear_data, taus=[0.1, 0.05], B=20, J=1000, seed=3)
    assert table.sources == ["Models", "Predictions"]
    assert table.taus == [0.05, 0.1]
    assert [len(row) for row in table.outcomes] == [2, 2]
    assert np.all((table.ratios.z >= 0.0) & (table.ratios.z <= 1.0))
    assert table.outcomes[1][0].source == "Predictions"
    assert table.outcomes[1][0].term_index == 1
    # the spread between two location estimates is a tiny share of the total
    assert table.asl(0, 0.05) < 0.05
    assert table.asl(1, 0.05) == 1.0


def test_format_cell():
    assert format_cell(0.04, [1.0, 0.034, 0.0]) == "0.04 (1,0.034,0)"


def test_table_row_columns(linear_data):
    table = test_all_terms(_mean_median_pipeline, linear_data, taus=[0.05], B=10, J=1000, seed=3)
    row = table_row("n", 60, table)
    assert row["n"] == 60
    assert set(row) >= {"Models", "Models_zbar", "Models_asl_0.05", "Predictions", "Predictions_asl_0.05"}
