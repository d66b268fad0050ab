"""
Quadratic-form representation of the decomposition terms
Every between term is a weighted sum, over the internal nodes of one tree
depth, of Ŷ'AŶ where Ŷ holds the children's conditional means centred at
the node mean and A = diag(child weights), i.e. Σ w_j Ŷ_j². A has trace 1
and rank equal to the number of positive child weights. The predictions
term is the leaf-weighted expected squared prediction error.
File location: ./panova/decompose/quadratic.py
"""

# imports
import math
from typing import List, NamedTuple

import numpy as np

from panova.core.tree import level_means
from panova.types import FactorTree, QuadraticFormTerm


class QuadraticDecomposition(NamedTuple):
    """Per-node quadratic forms for terms 0..K-1 and the residual (predictions) term"""

    forms: List[QuadraticFormTerm]
    residual: float

    def term_values(self, depth: int) -> List[float]:
        """Reassembled K+1 terms in report order"""
        values = []
        for k in range(depth):
            values.append(math.fsum(q.outer_weight * q.value for q in self.forms if q.term_index == k))
        values.append(self.residual)
        return values


def _form(term_index: int, path: tuple, child_weights: np.ndarray, centred: np.ndarray, outer: float) -> QuadraticFormTerm:
    A = np.diag(np.asarray(child_weights, dtype=float))
    return QuadraticFormTerm(
        term_index=term_index,
        path=path,
        matrix=A,
        centered_means=centred,
        outer_weight=float(outer),
        value=float(centred @ A @ centred),
    )


def quadratic_forms(t: FactorTree) -> QuadraticDecomposition:
    """One QuadraticFormTerm per internal node, grouped by the term it contributes to"""
    means = level_means(t)
    forms: List[QuadraticFormTerm] = []
    for k in range(1, t.depth + 1):
        outer = t.path_weights(k - 1) if k > 1 else np.ones(())
        for path in np.ndindex(*t.shape[: k - 1]):
            centred = means[k][path] - means[k - 1][path]
            forms.append(_form(k - 1, tuple(int(i) for i in path), t.weights[k - 1][path], centred, outer[path]))
    residual = math.fsum(np.ravel(t.path_weights(t.depth) * t.leaf_variances()).tolist())
    return QuadraticDecomposition(forms, residual)


def term_quadratic_form(t: FactorTree, term_index: int) -> QuadraticFormTerm:
    """
    Whole between term as one quadratic form over all depth-k children.

    Stacks every node's centred child means; A is diagonal with the joint path
    weights, so the form equals the outer-weighted sum of the per-node forms.
    """
    k = term_index + 1
    means = level_means(t)
    centred = np.ravel(means[k] - means[k - 1][..., None])
    joint = np.ravel(t.path_weights(k))
    return _form(term_index, (), joint, centred, 1.0)
