"""
Distributional diagnostics from bootstrap replicate trees
For each between term, the covariance of the stacked centred conditional
means across replicates gives the eigenvalues of AΣ and a g·χ²(h)
approximation. The predictions term is summarized by its mean and
variance only. None of this feeds a test decision.
File location: ./panova/decompose/distribution.py
"""

# imports
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from panova.core.tree import decompose_terms, level_means
from panova.decompose.box import box_gh, box_quantile
from panova.decompose.eigen import term_eigenvalues
from panova.decompose.quadratic import term_quadratic_form
from panova.errors import InvalidInputError, NumericalError
from panova.types import BoxApprox, DecompositionReport, FactorTree


def centred_mean_samples(trees: Sequence[FactorTree], term_index: int) -> np.ndarray:
    """(B, m_1···m_k) matrix of stacked centred child means for one between term"""
    k = term_index + 1
    rows = []
    for tree in trees:
        means = level_means(tree)
        rows.append(np.ravel(means[k] - means[k - 1][..., None]))
    shapes = {r.shape for r in rows}
    if len(shapes) != 1:
        raise InvalidInputError("replicate trees do not share one shape")
    return np.array(rows)


def box_diagnostics(tree: FactorTree, replicates: Sequence[FactorTree]) -> Tuple[Optional[BoxApprox], ...]:
    """g·χ²(h) per between term; None where the form is degenerate"""
    if len(replicates) < 2:
        raise InvalidInputError("need at least 2 replicate trees")
    result: List[Optional[BoxApprox]] = []
    for term_index in range(tree.depth):
        samples = centred_mean_samples(replicates, term_index)
        sigma = np.atleast_2d(np.cov(samples, rowvar=False, ddof=1))
        form = term_quadratic_form(tree, term_index)
        try:
            result.append(box_gh(term_eigenvalues(form, sigma)))
        except NumericalError:
            result.append(None)
    return tuple(result)


def term_moments(replicates: Sequence[FactorTree], term_index: int = -1) -> Dict[str, float]:
    """Bootstrap mean / variance of one decomposition term (default: the predictions term)"""
    values = np.array([decompose_terms(t)[term_index] for t in replicates])
    return {
        "mean": float(values.mean()),
        "variance": float(values.var(ddof=1)) if values.size > 1 else 0.0,
        "sd": float(values.std(ddof=1)) if values.size > 1 else 0.0,
        "replicates": int(values.size),
    }


def with_diagnostics(
    report: DecompositionReport, tree: FactorTree, replicates: Sequence[FactorTree]
) -> DecompositionReport:
    """Attach Box approximations and residual-term moments to a report"""
    return report.model_copy(
        update={"box": box_diagnostics(tree, replicates), "residual_moments": term_moments(replicates)}
    )


def box_summary(box: BoxApprox, level: float = 0.95) -> Dict[str, float]:
    return {"g": box.g, "h": box.h, "mean": box.mean, "variance": box.variance, f"q{level:g}": box_quantile(box, level)}
