"""
Factor-tree decomposition of predictive variance
Flattening, conditional level means, the K+1 term decomposition, trees built
from printed term values and the JSON tree format.
File location: ./panova/core/tree.py
"""

# imports
import math
from typing import Any, Dict, List, Sequence

import numpy as np

from panova.core.moments import mixture_variance
from panova.errors import InvalidInputError
from panova.types import (
    ComponentPredictive,
    DecompositionReport,
    Family,
    FactorTree,
    PredictiveMixture,
    WeightSource,
    create_mixture,
    create_tree,
    gaussian,
)

_TOTAL_LABELS = {
    "posterior": "Posterior predictive variance",
    "stacking": "Stacking predictive variance",
    "uniform": "Predictive variance (uniform weights)",
    "fixed": "Predictive variance",
}


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _fsum_array(values: np.ndarray) -> float:
    return math.fsum(np.ravel(values).tolist())


def table_sources(factors: Sequence[str]) -> List[str]:
    """Source column of the decomposition table: one row per factor plus Predictions"""
    return [*factors, "Predictions"]


def table_interpretations(factors: Sequence[str]) -> List[str]:
    rows = [f"Between {factors[0]} variance"]
    for k in range(1, len(factors)):
        outer = " ".join(reversed(factors[:k]))
        rows.append(f"Between {factors[k]} within {outer}")
    rows.append(f"Within {' '.join(factors)}")
    return rows


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def flatten(t: FactorTree) -> PredictiveMixture:
    """Leaf mixture; each leaf weight is the product of the edge weights on its path"""
    joint = t.path_weights(t.depth).ravel()
    return create_mixture(joint.tolist(), t.leaves, leaf_labels(t))


def leaf_labels(t: FactorTree) -> List[str]:
    """Row-major leaf names, e.g. 'logit/t,s'"""
    return ["/".join(t.levels[k][i] for k, i in enumerate(path)) for path in np.ndindex(*t.shape)]


def level_means(t: FactorTree) -> List[np.ndarray]:
    """
    Conditional predictive means E(Y | D, v_1..v_k) for k = 0..K.

    Entry k has shape (m_1, ..., m_k); entry 0 is the 0-d overall mean.
    """
    means = [t.leaf_means()]
    for k in range(t.depth - 1, -1, -1):
        means.append(np.sum(t.weights[k] * means[-1], axis=-1))
    return list(reversed(means))


def decompose_terms(t: FactorTree) -> List[float]:
    """The K+1 terms in table order: between V_1, ..., between V_K, predictions"""
    means = level_means(t)
    terms = []
    for k in range(1, t.depth + 1):
        deviation = means[k] - means[k - 1][..., None]
        terms.append(_fsum_array(t.path_weights(k) * deviation * deviation))
    terms.append(_fsum_array(t.path_weights(t.depth) * t.leaf_variances()))
    return terms


def decompose_k(t: FactorTree) -> DecompositionReport:
    """P-ANOVA decomposition of the tree's predictive variance into K+1 terms"""
    terms = decompose_terms(t)
    total = mixture_variance(flatten(t))
    return DecompositionReport(
        factors=t.factors,
        sources=tuple(table_sources(t.factors)),
        interpretations=tuple(table_interpretations(t.factors)),
        terms=tuple(terms),
        total=total,
        weight_source=t.weight_source,
    )


def total_label(weight_source: WeightSource) -> str:
    return _TOTAL_LABELS[weight_source]


def tree_from_terms(
    terms: Sequence[float],
    factors: Sequence[str] | None = None,
    center: float = 0.0,
    weight_source: WeightSource = "fixed",
) -> FactorTree:
    """
    Balanced binary tree whose decomposition reproduces the given terms.

    Each factor has two equally weighted levels whose means sit at
    ± sqrt(term) around the parent mean; all leaves share variance = last term.
    """
    terms = [float(v) for v in terms]
    if len(terms) < 2:
        raise InvalidInputError("need at least one between term and the predictions term")
    if any(v < 0.0 or not math.isfinite(v) for v in terms):
        raise InvalidInputError("decomposition terms must be finite and >= 0")
    K = len(terms) - 1
    factors = list(factors) if factors is not None else [f"V{k + 1}" for k in range(K)]
    if len(factors) != K:
        raise InvalidInputError("factor names must match the number of between terms")
    steps = [math.sqrt(v) for v in terms[:-1]]
    leaves = []
    for signs in np.ndindex(*([2] * K)):
        mean = center + math.fsum((1.0 if s == 0 else -1.0) * step for s, step in zip(signs, steps))
        leaves.append(gaussian(mean, terms[-1]))
    weights = [np.full((2,) * (k + 1), 0.5) for k in range(K)]
    return create_tree(
        factors=factors,
        levels=[("high", "low")] * K,
        weights=weights,
        leaves=leaves,
        weight_source=weight_source,
    )


# ──────────────────────────────────────────────────────────────────────────────
# JSON format
# ──────────────────────────────────────────────────────────────────────────────

def _leaf_to_dict(leaf: ComponentPredictive) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"mean": leaf.mean, "variance": leaf.variance, "family": leaf.family.value}
    if leaf.family is Family.BINOMIAL:
        doc["trials"] = leaf.trials
        doc["success_prob"] = leaf.success_prob
    elif leaf.family is Family.EMPIRICAL:
        doc["samples"] = list(leaf.samples or ())
    return doc


def tree_to_json(t: FactorTree) -> Dict[str, Any]:
    """Plain-JSON document for a tree (floats round-trip exactly through orjson)"""
    return {
        "factors": list(t.factors),
        "levels": [list(lv) for lv in t.levels],
        "weights": [w.tolist() for w in t.weights],
        "leaves": [_leaf_to_dict(leaf) for leaf in t.leaves],
        "weight_source": t.weight_source,
    }


def _leaf_from_dict(i: int, leaf: Any) -> ComponentPredictive:
    if not isinstance(leaf, dict) or "mean" not in leaf or "variance" not in leaf:
        raise InvalidInputError(f"tree document: leaves[{i}] needs mean and variance")
    family = leaf.get("family", "gaussian")
    try:
        family = Family(family)
    except (TypeError, ValueError):
        known = ", ".join(f.value for f in Family)
        raise InvalidInputError(f"tree document: leaves[{i}].family {family!r} is not one of {known}") from None
    for field in ("mean", "variance"):
        try:
            float(leaf[field])
        except (TypeError, ValueError):
            raise InvalidInputError(f"tree document: leaves[{i}].{field} {leaf[field]!r} is not a number") from None
    try:
        return ComponentPredictive(
            mean=float(leaf["mean"]),
            variance=float(leaf["variance"]),
            family=family,
            trials=leaf.get("trials"),
            success_prob=leaf.get("success_prob"),
            samples=tuple(leaf["samples"]) if leaf.get("samples") is not None else None,
        )
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"tree document: leaves[{i}] is invalid ({exc})") from exc


def tree_from_json(doc: Dict[str, Any]) -> FactorTree:
    """Inverse of tree_to_json; reports the offending field on malformed input"""
    if not isinstance(doc, dict):
        raise InvalidInputError("tree document: top level must be an object")
    for field in ("factors", "levels", "weights", "leaves"):
        if field not in doc:
            raise InvalidInputError(f"tree document: missing field {field!r}")
    if not isinstance(doc["leaves"], list):
        raise InvalidInputError("tree document: leaves must be a list")
    leaves = [_leaf_from_dict(i, leaf) for i, leaf in enumerate(doc["leaves"])]
    try:
        return create_tree(
            factors=doc["factors"],
            levels=doc["levels"],
            weights=doc["weights"],
            leaves=leaves,
            weight_source=doc.get("weight_source", "fixed"),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"tree document: {exc}") from exc
