"""
Tests for the quadratic-form view of the decomposition, eigenvalues of AΣ,
the g·χ²(h) approximation and the decomposition tables.

Running Tests:
    pytest tests/test_decompose.py -v
"""
import numpy as np
import pandas as pd
import pytest
from scipy import stats

from panova.core.tree import decompose_k, decompose_terms
from panova.decompose.box import box_cdf, box_gh, box_quantile
from panova.decompose.distribution import box_diagnostics, term_moments, with_diagnostics
from panova.decompose.eigen import term_eigenvalues
from panova.decompose.quadratic import quadratic_forms, term_quadratic_form
from panova.decompose.report import report_rows, report_to_json, write_report
from panova.errors import InvalidInputError, NumericalError
from panova.infrastructure.io import read_json
from panova.infrastructure.parallel import philox_rng
from panova.types import create_tree, gaussian


def _replicates(tree, rng, count=40):
    """Trees with jittered leaf means and variances"""
    out = []
    for _ in range(count):
        leaves = tuple(
            gaussian(leaf.mean + rng.normal(0, 0.3), leaf.variance * rng.uniform(0.8, 1.2)) for leaf in tree.leaves
        )
        out.append(tree.model_copy(update={"leaves": leaves}))
    return out


# ──────────────────────────────────────────────────────────────────────────────
# Quadratic forms
# ──────────────────────────────────────────────────────────────────────────────

def test_node_forms_reassemble_the_terms(uneven_tree):
    qd = quadratic_forms(uneven_tree)
    assert qd.term_values(uneven_tree.depth) == pytest.approx(decompose_terms(uneven_tree), abs=1e-12)
    # one root form, one form per first-level node
    assert [q.term_index for q in qd.forms] == [0, 1, 1]


def test_node_matrix_is_diagonal_child_weights(uneven_tree):
    form = quadratic_forms(uneven_tree).forms[2]
    assert form.path == (1,)
    assert form.child_weights == pytest.approx([0.6, 0.1, 0.3])
    assert form.outer_weight == pytest.approx(0.7)


@pytest.mark.parametrize("term_index", [0, 1])
def test_whole_term_form_matches_term(uneven_tree, term_index):
    q = term_quadratic_form(uneven_tree, term_index)
    assert q.value == pytest.approx(decompose_terms(uneven_tree)[term_index], abs=1e-12)


def test_forms_reconstruct_terms_on_random_trees(random_tree):
    rng = philox_rng(11)
    for _ in range(150):
        tree = random_tree(rng, int(rng.integers(1, 5)))
        terms = decompose_terms(tree)
        assert quadratic_forms(tree).term_values(tree.depth) == pytest.approx(terms, rel=1e-9, abs=1e-12)
        for k in range(tree.depth):
            assert term_quadratic_form(tree, k).value == pytest.approx(terms[k], rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("d", [0.5, 1.0, 3.0])
def test_opposite_means_give_the_squared_spread(d):
    tree = create_tree(["M"], [["a", "b"]], [[0.5, 0.5]], [gaussian(10.0 + d, 1.0), gaussian(10.0 - d, 1.0)])
    q = term_quadratic_form(tree, 0)
    assert q.value == pytest.approx(d * d, rel=1e-12)
    assert np.trace(q.matrix) == pytest.approx(1.0)


# ──────────────────────────────────────────────────────────────────────────────
# Eigenvalues and the g·χ²(h) approximation
# ──────────────────────────────────────────────────────────────────────────────

def test_identity_covariance_gives_the_weights(uneven_tree):
    q = term_quadratic_form(uneven_tree, 0)
    assert term_eigenvalues(q, np.eye(2)) == pytest.approx([0.7, 0.3])


def test_eigenvalues_scale_with_covariance(uneven_tree):
    q = term_quadratic_form(uneven_tree, 0)
    assert term_eigenvalues(q, 4.0 * np.eye(2)) == pytest.approx([2.8, 1.2])


def test_eigen_checks_the_covariance(uneven_tree):
    q = term_quadratic_form(uneven_tree, 0)
    with pytest.raises(InvalidInputError, match="does not conform"):
        term_eigenvalues(q, np.eye(3))
    with pytest.raises(NumericalError, match="not symmetric"):
        term_eigenvalues(q, np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NumericalError, match="not PSD"):
        term_eigenvalues(q, np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_eigenvalues_sum_to_the_trace_on_random_covariances(random_tree):
    rng = philox_rng(12)
    for _ in range(50):
        tree = random_tree(rng, int(rng.integers(1, 4)))
        q = term_quadratic_form(tree, int(rng.integers(0, tree.depth)))
        m = q.matrix.shape[0]
        M = rng.normal(size=(m, m))
        sigma = M @ M.T
        sigma = 0.5 * (sigma + sigma.T)
        lam = term_eigenvalues(q, sigma)
        dense = np.sort(np.linalg.eigvals(q.matrix @ sigma).real)[::-1]
        scale = max(1.0, float(np.max(np.abs(dense))))
        assert sum(lam) == pytest.approx(float(np.trace(q.matrix @ sigma)), rel=1e-9, abs=1e-8 * scale)
        assert lam == pytest.approx(np.clip(dense, 0.0, None).tolist(), abs=1e-8 * scale)


def test_box_moments_match_the_weighted_sum():
    box = box_gh([1.0, 1.0])
    assert (box.g, box.h) == (1.0, 2.0)
    lam = [3.0, 1.0, 0.5]
    box = box_gh(lam)
    assert box.mean == pytest.approx(sum(lam))
    assert box.variance == pytest.approx(2.0 * sum(v * v for v in lam))


def test_box_moments_match_a_simulated_weighted_sum():
    rng = philox_rng(13)
    N = 1_000_000
    for _ in range(3):
        lam = rng.gamma(1.5, 1.0, size=int(rng.integers(1, 7)))
        box = box_gh(lam)
        assert box.g * box.h == pytest.approx(float(lam.sum()), rel=1e-12)
        assert 2.0 * box.g**2 * box.h == pytest.approx(2.0 * float(np.sum(lam**2)), rel=1e-12)
        x = rng.chisquare(1, size=(N, lam.size)) @ lam
        mean = float(x.mean())
        sq = (x - mean) ** 2
        assert abs(mean - box.mean) <= 3.0 * float(x.std()) / np.sqrt(N)
        assert abs(float(sq.mean()) - box.variance) <= 3.0 * float(sq.std()) / np.sqrt(N)


def test_single_eigenvalue_is_exact():
    box = box_gh([2.0])
    assert box_cdf(box, 3.0) == pytest.approx(stats.chi2.cdf(1.5, df=1))
    assert box_quantile(box, 0.95) == pytest.approx(2.0 * stats.chi2.ppf(0.95, df=1))


def test_box_rejects_degenerate_inputs():
    with pytest.raises(NumericalError, match="degenerate"):
        box_gh([0.0, 0.0])
    with pytest.raises(InvalidInputError):
        box_gh([1.0, -0.5])
    with pytest.raises(InvalidInputError):
        box_quantile(box_gh([1.0]), 1.0)


# ──────────────────────────────────────────────────────────────────────────────
# Replicate diagnostics and reports
# ──────────────────────────────────────────────────────────────────────────────

def test_box_diagnostics_per_between_term(uneven_tree, rng):
    boxes = box_diagnostics(uneven_tree, _replicates(uneven_tree, rng))
    assert len(boxes) == uneven_tree.depth
    assert all(b is not None and b.g > 0.0 and b.h >= 1.0 for b in boxes)


def test_box_diagnostics_needs_replicates(uneven_tree):
    with pytest.raises(InvalidInputError):
        box_diagnostics(uneven_tree, [uneven_tree])


def test_identical_replicates_have_no_approximation(uneven_tree):
    boxes = box_diagnostics(uneven_tree, [uneven_tree] * 5)
    assert boxes == (None, None)


def test_term_moments(uneven_tree, rng):
    moments = term_moments(_replicates(uneven_tree, rng, 10))
    assert moments["replicates"] == 10
    assert moments["variance"] > 0.0
    assert moments["sd"] == pytest.approx(np.sqrt(moments["variance"]))


def test_report_rows_end_with_total(challenger_tree):
    rows = report_rows(decompose_k(challenger_tree))
    assert [r["source"] for r in rows] == ["Links", "Models", "Predictions", "Total"]
    assert rows[-1]["interpretation"] == "Posterior predictive variance"
    assert rows[-1]["proportion"] == 1.0


def test_report_json_carries_diagnostics(uneven_tree, rng):
    report = with_diagnostics(decompose_k(uneven_tree), uneven_tree, _replicates(uneven_tree, rng))
    doc = report_to_json(report)
    assert len(doc["box"]) == 2
    assert doc["residual_moments"]["replicates"] == 40
    assert doc["term_sum"] == pytest.approx(doc["total"])


def test_write_report(scenario_tree, tmp_path):
    paths = write_report(decompose_k(scenario_tree), tmp_path, stem="scenarios")
    frame = pd.read_csv(paths["csv"])
    assert list(frame.columns) == [
        "source", "interpretation", "variance", "variance_rounded", "proportion", "proportion_rounded"
    ]
    assert frame["variance"].iloc[-1] == pytest.approx(895.0)
    assert frame["proportion_rounded"].iloc[0] == pytest.approx(0.3955)
    doc = read_json(paths["json"])
    assert doc["factors"] == ["Scenarios", "Models"]
