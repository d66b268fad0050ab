"""
Variable-set and model importance from a joint weight grid
File location: ./panova/average/importance.py
"""

# imports
import numpy as np

from panova.types import check_simplex


def joint_from_conditionals(model_weights: np.ndarray, set_weights: np.ndarray) -> np.ndarray:
    """Joint grid p(m_i, X_j | D) = p(m_i | D) p(X_j | D, m_i)"""
    model_weights = np.asarray(model_weights, dtype=float)
    set_weights = np.asarray(set_weights, dtype=float)
    check_simplex(model_weights, tol=1e-10, what="model weights")
    for row in set_weights:
        check_simplex(row, tol=1e-10, what="conditional set weights")
    return model_weights[:, None] * set_weights


def variable_set_importance(joint: np.ndarray) -> np.ndarray:
    """p(X_j | D) = Σ_i p(m_i | D) p(X_j | D, m_i): the column marginal of the joint grid"""
    joint = np.atleast_2d(np.asarray(joint, dtype=float))
    check_simplex(joint.ravel(), tol=1e-10, what="joint grid")
    return joint.sum(axis=0)


def model_importance(joint: np.ndarray) -> np.ndarray:
    """Row marginal of the joint grid: importance of each model (or outer level)"""
    joint = np.atleast_2d(np.asarray(joint, dtype=float))
    check_simplex(joint.ravel(), tol=1e-10, what="joint grid")
    return joint.sum(axis=1)
