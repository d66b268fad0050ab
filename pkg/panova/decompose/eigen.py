"""
Eigenvalues of AΣ for a quadratic form in a random centred-mean vector
Solved through the symmetric similar matrix Σ^½ A Σ^½.
File location: ./panova/decompose/eigen.py
"""

# imports
from typing import List

import numpy as np
from scipy import linalg

from panova.errors import InvalidInputError, NumericalError
from panova.types import QuadraticFormTerm

NEGATIVE_TOL = 1e-10


def _psd_sqrt(sigma: np.ndarray) -> np.ndarray:
    evals, evecs = linalg.eigh(sigma)
    scale = max(1.0, float(np.max(np.abs(evals))))
    if evals.min() < -NEGATIVE_TOL * scale:
        raise NumericalError(f"covariance is not PSD (smallest eigenvalue {evals.min():.3g})")
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T


def term_eigenvalues(q: QuadraticFormTerm, sigma: np.ndarray) -> List[float]:
    """Eigenvalues of A Σ in decreasing order; tiny negative values are clamped to 0"""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    A = q.matrix
    if sigma.shape != A.shape:
        raise InvalidInputError(f"covariance shape {sigma.shape} does not conform to A {A.shape}")
    if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
        raise NumericalError("covariance is not symmetric")
    root = _psd_sqrt(sigma)
    evals = linalg.eigh(root @ A @ root, eigvals_only=True)
    scale = max(1.0, float(np.max(np.abs(evals))))
    if evals.min() < -NEGATIVE_TOL * scale:
        raise NumericalError(f"negative eigenvalue {evals.min():.3g} in AΣ")
    return sorted(np.clip(evals, 0.0, None).tolist(), reverse=True)
