"""
Shared fixtures: seeded streams, printed decompositions as stored trees,
small datasets and an isolated output directory.
File location: ./tests/conftest.py
"""

# imports
import math

import numpy as np
import pytest

from panova.config import AppConfig, RuntimeConfig
from panova.core.tree import tree_from_terms
from panova.infrastructure.parallel import philox_rng
from panova.types import Dataset, Link, create_mixture, create_tree, gaussian


@pytest.fixture
def rng():
    return philox_rng(1234)


@pytest.fixture
def stacking_mixture():
    """Two equally weighted gaussians with within 2.39 and between 0.58"""
    step = math.sqrt(0.58)
    return create_mixture([0.5, 0.5], [gaussian(10.0 + step, 2.39), gaussian(10.0 - step, 2.39)], ["LASSO", "EN"])


@pytest.fixture
def challenger_tree():
    """Links × Models tree with the printed Challenger terms"""
    return tree_from_terms([0.0017, 0.0996, 0.01469], factors=["Links", "Models"], weight_source="posterior")


@pytest.fixture
def scenario_tree():
    """Scenarios × Models tree whose between-scenarios share is 354 / 895"""
    return tree_from_terms([354.0, 178.0, 363.0], factors=["Scenarios", "Models"])


@pytest.fixture
def uneven_tree():
    """2 × 3 tree with unequal weights and leaf variances"""
    return create_tree(
        factors=["Links", "Models"],
        levels=[["logit", "probit"], ["a", "b", "c"]],
        weights=[[0.3, 0.7], [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]]],
        leaves=[gaussian(m, v) for m, v in zip([1.0, 2.0, 4.0, 0.5, 3.0, 2.5], [0.4, 1.0, 0.2, 0.7, 0.3, 0.9])],
    )


@pytest.fixture
def random_tree():
    """Factory for trees of the given depth with 1-3 levels per factor, random weights and gaussian leaves"""

    def build(rng, depth):
        shape = tuple(int(m) for m in rng.integers(1, 4, size=depth))
        weights = []
        for k in range(depth):
            raw = rng.random(shape[: k + 1]) + 1e-3
            weights.append(raw / raw.sum(axis=-1, keepdims=True))
        n_leaves = int(np.prod(shape))
        leaves = [gaussian(m, v) for m, v in zip(rng.normal(0, 5, n_leaves), rng.gamma(2.0, 1.0, n_leaves))]
        factors = [f"V{k + 1}" for k in range(depth)]
        return create_tree(factors, [[f"l{i}" for i in range(m)] for m in shape], weights, leaves)

    return build


@pytest.fixture
def linear_data(rng):
    """n = 60 rows of y = 2 x1 - x3 + noise with five features"""
    X = rng.standard_normal((60, 5))
    y = 1.0 + 2.0 * X[:, 0] - X[:, 2] + 0.5 * rng.standard_normal(60)
    return Dataset(X=X, y=y)


@pytest.fixture
def binomial_data(rng):
    """n = 200 logit rows with 30 trials each, beta = (0.75, -0.5) and intercept 0.2"""
    X = rng.standard_normal((200, 2))
    eta = 0.2 + X @ np.array([0.75, -0.5])
    y = rng.binomial(30, 1.0 / (1.0 + np.exp(-eta)))
    return Dataset(X=X, y=y, trials=np.full(200, 30), feature_names=("t", "s"))


@pytest.fixture
def all_links():
    return list(Link)


@pytest.fixture
def app_config(tmp_path):
    """Default settings writing under tmp_path, single worker, no progress bars"""
    runtime = RuntimeConfig(threads=1, out_dir=tmp_path / "out", log_dir=tmp_path / "out" / "logs", progress=False)
    return AppConfig(runtime=runtime)
