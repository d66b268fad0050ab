"""
Shared types and factories for panova
Central place for the domain types every subpackage consumes: predictive
components, mixtures, factor trees, datasets, fitted models, weight vectors,
decomposition reports and test outcomes. All models are frozen pydantic
models; array-valued fields are stored read-only.

File location: ./panova/types.py
"""

# imports
import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from panova.errors import InvalidInputError

SIMPLEX_TOL = 1e-12
BINOMIAL_CONSISTENCY_TOL = 1e-10

WeightSource = Literal["posterior", "stacking", "uniform", "fixed"]


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _frozen_array(values: Any, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def check_simplex(weights: Sequence[float], tol: float = SIMPLEX_TOL, what: str = "weights") -> None:
    """Raise unless weights are nonnegative and sum to one within tol"""
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise InvalidInputError(f"{what}: empty weight vector")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError(f"{what}: non-finite weight")
    if np.any(w < 0.0):
        raise InvalidInputError(f"{what}: negative weight {w.min()!r}")
    total = math.fsum(w.tolist())
    if abs(total - 1.0) > tol:
        raise InvalidInputError(f"{what}: weights sum to {total!r}, not 1")


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"
    EMPIRICAL = "empirical"


class Link(str, Enum):
    LOGIT = "logit"
    CLOGLOG = "cloglog"
    PROBIT = "probit"


class PenaltyKind(str, Enum):
    OLS = "ols"
    RIDGE = "ridge"
    LASSO = "lasso"
    ALASSO = "alasso"
    ENET = "enet"
    AENET = "aenet"


# ──────────────────────────────────────────────────────────────────────────────
# Predictive components and mixtures
# ──────────────────────────────────────────────────────────────────────────────

class ComponentPredictive(BaseModel):
    """One component predictive distribution: gaussian, binomial count or empirical sample"""

    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float
    family: Family = Family.GAUSSIAN
    trials: Optional[int] = None
    success_prob: Optional[float] = None
    samples: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def _check_family(self) -> "ComponentPredictive":
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise InvalidInputError("component moments must be finite")
        if self.variance < 0.0:
            raise InvalidInputError(f"negative variance {self.variance!r}")
        if self.family is Family.BINOMIAL:
            if self.trials is None or self.trials < 1 or self.success_prob is None:
                raise InvalidInputError("binomial component needs trials >= 1 and success_prob")
            p = self.success_prob
            if not 0.0 <= p <= 1.0:
                raise InvalidInputError(f"success_prob {p!r} outside [0, 1]")
            if abs(self.mean - self.trials * p) > BINOMIAL_CONSISTENCY_TOL or abs(
                self.variance - self.trials * p * (1.0 - p)
            ) > BINOMIAL_CONSISTENCY_TOL:
                raise InvalidInputError("binomial mean/variance inconsistent with trials and success_prob")
        if self.family is Family.EMPIRICAL and (self.samples is None or len(self.samples) < 2):
            raise InvalidInputError("empirical component needs at least 2 samples")
        return self

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def gaussian(mean: float, variance: float) -> ComponentPredictive:
    """Gaussian component N(mean, variance)"""
    return ComponentPredictive(mean=float(mean), variance=float(variance))


def binomial_count(trials: int, success_prob: float) -> ComponentPredictive:
    """Binomial count component with moments derived from (trials, p)"""
    p = float(success_prob)
    return ComponentPredictive(
        mean=trials * p,
        variance=trials * p * (1.0 - p),
        family=Family.BINOMIAL,
        trials=int(trials),
        success_prob=p,
    )


def empirical(samples: Sequence[float]) -> ComponentPredictive:
    """Empirical component; variance uses the unbiased (n - 1) divisor"""
    values = np.asarray(samples, dtype=float)
    if values.size < 2:
        raise InvalidInputError("empirical component needs at least 2 samples")
    return ComponentPredictive(
        mean=float(values.mean()),
        variance=float(values.var(ddof=1)),
        family=Family.EMPIRICAL,
        samples=tuple(values.tolist()),
    )


class PredictiveMixture(BaseModel):
    """Finite weighted mixture of component predictives (BMA or stacking predictive)"""

    model_config = ConfigDict(frozen=True)

    weights: Tuple[float, ...]
    components: Tuple[ComponentPredictive, ...]
    labels: Optional[Tuple[str, ...]] = None

    @model_validator(mode="after")
    def _check_weights(self) -> "PredictiveMixture":
        if len(self.weights) != len(self.components):
            raise InvalidInputError("mixture weights and components differ in length")
        if self.labels is not None and len(self.labels) != len(self.components):
            raise InvalidInputError("mixture labels and components differ in length")
        if self.weights:
            check_simplex(self.weights, what="mixture")
        return self

    def __len__(self) -> int:
        return len(self.components)


def create_mixture(
    weights: Sequence[float],
    components: Sequence[ComponentPredictive],
    labels: Optional[Sequence[str]] = None,
) -> PredictiveMixture:
    """Factory that normalizes the container types"""
    return PredictiveMixture(
        weights=tuple(float(w) for w in weights),
        components=tuple(components),
        labels=tuple(labels) if labels is not None else None,
    )


# ──────────────────────────────────────────────────────────────────────────────
# Factor tree
# ──────────────────────────────────────────────────────────────────────────────

def _rectangular_array(nested: Any, depth: int) -> np.ndarray:
    """Convert nested lists of the given depth to an array, rejecting ragged input"""
    def shape_of(node: Any, level: int) -> Tuple[int, ...]:
        if level == 0:
            if isinstance(node, (list, tuple, np.ndarray)):
                raise InvalidInputError("non-rectangular factor tree")
            return ()
        if not isinstance(node, (list, tuple, np.ndarray)) or len(node) == 0:
            raise InvalidInputError("non-rectangular factor tree")
        shapes = {shape_of(child, level - 1) for child in node}
        if len(shapes) != 1:
            raise InvalidInputError("non-rectangular factor tree")
        return (len(node),) + shapes.pop()

    if isinstance(nested, np.ndarray) and nested.ndim == depth:
        return _frozen_array(nested)
    shape_of(nested, depth)
    return _frozen_array(nested)


class FactorTree(BaseModel):
    """
    Rectangular hierarchy V = (V_1, ..., V_K) of modeling choices.

    weights[k] has shape (m_1, ..., m_{k+1}); its last axis holds the
    conditional weights of the levels of factor k+1 given the path above.
    leaves are stored in row-major order over the level grid.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    factors: Tuple[str, ...]
    levels: Tuple[Tuple[str, ...], ...]
    weights: Tuple[np.ndarray, ...]
    leaves: Tuple[ComponentPredictive, ...]
    weight_source: WeightSource = "fixed"

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value: Any) -> Tuple[np.ndarray, ...]:
        if not isinstance(value, (list, tuple)):
            raise InvalidInputError("factor tree weights must be a list of nested arrays")
        return tuple(_rectangular_array(w, depth=k + 1) for k, w in enumerate(value))

    @model_validator(mode="after")
    def _check_structure(self) -> "FactorTree":
        K = len(self.factors)
        if K < 1:
            raise InvalidInputError("factor tree needs at least one factor")
        if len(self.levels) != K or len(self.weights) != K:
            raise InvalidInputError("non-rectangular factor tree")
        shape = tuple(len(lv) for lv in self.levels)
        for k, w in enumerate(self.weights):
            if w.shape != shape[: k + 1]:
                raise InvalidInputError("non-rectangular factor tree")
            if np.any(~np.isfinite(w)) or np.any(w < 0.0):
                raise InvalidInputError(f"factor {self.factors[k]!r}: edge weights must be finite and >= 0")
            sums = w.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > SIMPLEX_TOL):
                raise InvalidInputError(
                    f"factor {self.factors[k]!r}: child edge weights do not sum to 1"
                )
        if len(self.leaves) != int(np.prod(shape)):
            raise InvalidInputError("non-rectangular factor tree")
        return self

    @property
    def depth(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(lv) for lv in self.levels)

    def leaf_means(self) -> np.ndarray:
        return np.array([leaf.mean for leaf in self.leaves], dtype=float).reshape(self.shape)

    def leaf_variances(self) -> np.ndarray:
        return np.array([leaf.variance for leaf in self.leaves], dtype=float).reshape(self.shape)

    def path_weights(self, k: int) -> np.ndarray:
        """Joint probability of every depth-k path (k = 1..K), shape (m_1, ..., m_k)"""
        joint = np.asarray(self.weights[0], dtype=float)
        for j in range(1, k):
            joint = joint[..., None] * self.weights[j]
        return joint


def create_tree(
    factors: Sequence[str],
    levels: Sequence[Sequence[str]],
    weights: Sequence[Any],
    leaves: Sequence[ComponentPredictive],
    weight_source: WeightSource = "fixed",
) -> FactorTree:
    """Factory for FactorTree from plain nested lists"""
    return FactorTree(
        factors=tuple(factors),
        levels=tuple(tuple(str(v) for v in lv) for lv in levels),
        weights=list(weights),
        leaves=tuple(leaves),
        weight_source=weight_source,
    )


# ──────────────────────────────────────────────────────────────────────────────
# Decomposition and quadratic forms
# ──────────────────────────────────────────────────────────────────────────────

class QuadraticFormTerm(BaseModel):
    """
    One weighted quadratic form Ŷ'AŶ at an internal node of the tree.

    A = diag(child weights) with trace 1; Ŷ holds the child conditional
    means centred at the node mean. outer_weight is the probability of the
    path leading to the node.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    term_index: int
    path: Tuple[int, ...]
    matrix: np.ndarray
    centered_means: np.ndarray
    outer_weight: float
    value: float

    @property
    def child_weights(self) -> np.ndarray:
        return np.diag(self.matrix).copy()


class BoxApprox(BaseModel):
    """Two-moment g * chi2(h) approximation of a weighted sum of chi2_1 variables"""

    model_config = ConfigDict(frozen=True)

    g: float
    h: float
    eigenvalues: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return self.g * self.h

    @property
    def variance(self) -> float:
        return 2.0 * self.g * self.g * self.h


class DecompositionReport(BaseModel):
    """K + 1 P-ANOVA terms ordered between-V1, ..., between-VK, predictions"""

    model_config = ConfigDict(frozen=True)

    factors: Tuple[str, ...]
    sources: Tuple[str, ...]
    interpretations: Tuple[str, ...]
    terms: Tuple[float, ...]
    total: float
    weight_source: WeightSource = "fixed"
    residual_moments: Optional[Dict[str, float]] = None
    box: Optional[Tuple[Optional[BoxApprox], ...]] = None

    @property
    def proportions(self) -> Tuple[float, ...]:
        if self.total <= 0.0:
            return tuple(0.0 for _ in self.terms)
        return tuple(t / self.total for t in self.terms)

    @property
    def term_sum(self) -> float:
        return math.fsum(self.terms)


# ──────────────────────────────────────────────────────────────────────────────
# Data and fitted models
# ──────────────────────────────────────────────────────────────────────────────

class Dataset(BaseModel):
    """Design matrix, response and optional binomial trials"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    X: np.ndarray
    y: np.ndarray
    trials: Optional[np.ndarray] = None
    feature_names: Tuple[str, ...] = ()
    response_name: str = "y"

    @field_validator("X", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise InvalidInputError("X must be a 2-D matrix")
        arr.setflags(write=False)
        return arr

    @field_validator("y", mode="before")
    @classmethod
    def _as_vector(cls, value: Any) -> np.ndarray:
        return _frozen_array(np.ravel(np.asarray(value, dtype=float)))

    @field_validator("trials", mode="before")
    @classmethod
    def _as_trials(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return _frozen_array(np.ravel(np.asarray(value)), dtype=float)

    @model_validator(mode="after")
    def _check_data(self) -> "Dataset":
        n = self.X.shape[0]
        if n < 2:
            raise InvalidInputError("dataset needs n >= 2 rows")
        if self.y.shape != (n,):
            raise InvalidInputError("y length does not match X rows")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InvalidInputError("dataset contains NaN or Inf")
        if self.feature_names and len(self.feature_names) != self.X.shape[1]:
            raise InvalidInputError("feature_names length does not match X columns")
        if self.trials is not None:
            t = self.trials
            if t.shape != (n,) or np.any(t < 1) or np.any(t != np.round(t)):
                raise InvalidInputError("trials must be positive integers, one per row")
            if np.any(self.y < 0) or np.any(self.y > t) or np.any(self.y != np.round(self.y)):
                raise InvalidInputError("binomial response must be integral with 0 <= y <= trials")
        return self

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_binomial(self) -> bool:
        return self.trials is not None

    def names(self) -> Tuple[str, ...]:
        return self.feature_names or tuple(f"x{j + 1}" for j in range(self.p))

    def take(self, rows: np.ndarray) -> "Dataset":
        """Row subset / resample, keeping names"""
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            X=self.X[rows],
            y=self.y[rows],
            trials=None if self.trials is None else self.trials[rows],
            feature_names=self.feature_names,
            response_name=self.response_name,
        )


class PenaltySpec(BaseModel):
    """Penalty family, strength and (for adaptive kinds) per-coefficient weights"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    kind: PenaltyKind
    lambda_: float = Field(0.0, alias="lambda")
    alpha: Optional[float] = None
    adaptive_weights: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def _check_penalty(self) -> "PenaltySpec":
        if not math.isfinite(self.lambda_) or self.lambda_ < 0.0:
            raise InvalidInputError(f"lambda must be >= 0, got {self.lambda_!r}")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"enet alpha must lie in [0, 1], got {self.alpha!r}")
        if self.adaptive_weights is not None and any(
            not (w > 0.0 and math.isfinite(w)) for w in self.adaptive_weights
        ):
            raise InvalidInputError("adaptive weights must be positive and finite")
        return self

    def mixing(self, default_alpha: float) -> float:
        """Elastic-net mixing implied by the kind"""
        if self.kind in (PenaltyKind.LASSO, PenaltyKind.ALASSO):
            return 1.0
        if self.kind in (PenaltyKind.RIDGE, PenaltyKind.OLS):
            return 0.0
        return self.alpha if self.alpha is not None else default_alpha

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return self.model_copy(update={"lambda_": float(lam)})


class FittedModel(BaseModel):
    """
    A fitted candidate predictor.

    beta holds the intercept first, then one coefficient per column of X
    (exact zeros off the support). support uses 0-based column indices.
    For GLMs, cov is the covariance of (intercept, support coefficients).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: str
    beta: np.ndarray
    support: Tuple[int, ...]
    sigma2: float = 0.0
    link: Optional[Link] = None
    cov: Optional[np.ndarray] = None
    constant_mean: Optional[float] = None
    loglik: Optional[float] = None
    n_obs: int = 0
    converged: bool = True
    fallback: bool = False
    n_iter: int = 0
    label: str = ""

    @field_validator("beta", mode="before")
    @classmethod
    def _freeze_beta(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @property
    def n_params(self) -> int:
        return len(self.support) + 1

    def linear_predictor(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(self.beta[0] + x @ self.beta[1:])

    def predict(self, x: Sequence[float]) -> float:
        """Point prediction: mean response (linear) or success probability (GLM)"""
        if self.constant_mean is not None:
            return self.constant_mean
        eta = self.linear_predictor(x)
        if self.link is None:
            return eta
        from panova.fit.links import inverse_link

        return float(inverse_link(self.link, np.array([eta]))[0])

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        """Vectorized predict over the rows of X"""
        X = np.asarray(X, dtype=float)
        if self.constant_mean is not None:
            return np.full(X.shape[0], self.constant_mean)
        eta = self.beta[0] + X @ self.beta[1:]
        if self.link is None:
            return eta
        from panova.fit.links import inverse_link

        return inverse_link(self.link, eta)

    def probability_variance(self, x: Sequence[float]) -> float:
        """Delta-method variance of the fitted probability at x (GLMs only)"""
        if self.link is None or self.cov is None:
            return 0.0
        from panova.fit.links import mu_eta

        x = np.asarray(x, dtype=float).ravel()
        z = np.concatenate(([1.0], x[list(self.support)]))
        eta = self.linear_predictor(x)
        d = float(mu_eta(self.link, np.array([eta]))[0])
        return float(max(d * d * (z @ self.cov @ z), 0.0))

    def predictive(
        self,
        x: Sequence[float],
        pred_variance: float = 0.0,
        target: Literal["response", "probability", "count"] = "response",
        trials: Optional[int] = None,
    ) -> ComponentPredictive:
        """
        Component predictive for a future outcome at x.

        The count target is the plug-in Binomial(trials, p_hat); only the
        probability target carries the delta-method variance of p_hat.
        """
        mean = self.predict(x)
        if self.link is None:
            return gaussian(mean, self.sigma2 + pred_variance)
        if target == "count":
            if trials is None:
                raise InvalidInputError("count target needs trials")
            return binomial_count(trials, mean)
        return gaussian(mean, self.probability_variance(x) + pred_variance)


# ──────────────────────────────────────────────────────────────────────────────
# Averaging, testing and intervals
# ──────────────────────────────────────────────────────────────────────────────

class WeightVector(BaseModel):
    """Model weights on the probability simplex with their provenance"""

    model_config = ConfigDict(frozen=True)

    weights: Tuple[float, ...]
    method: Literal["stacking", "bic-posterior", "uniform", "fixed"]
    labels: Optional[Tuple[str, ...]] = None
    objective: Optional[float] = None
    iterations: int = 0

    @model_validator(mode="after")
    def _check(self) -> "WeightVector":
        check_simplex(self.weights, tol=1e-10, what="weight vector")
        return self

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


class TestOutcome(BaseModel):
    """Result of the two-layer bootstrap test for one term and one tau"""

    __test__ = False

    model_config = ConfigDict(frozen=True)

    z_samples: Tuple[float, ...]
    z_bar: float
    se: float
    t_stat: float
    tau: float
    J: int
    asl: float
    reject_at: Dict[str, bool]
    degenerate: bool = False
    null_method: Literal["shift", "literal"] = "shift"
    term_index: Optional[int] = None
    source: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "TestOutcome":
        if len(self.z_samples) < 2:
            raise InvalidInputError("test needs B >= 2 ratio samples")
        if not 0.0 < self.tau < 1.0:
            raise InvalidInputError("tau must lie in (0, 1)")
        if not 0.0 <= self.asl <= 1.0:
            raise InvalidInputError("asl outside [0, 1]")
        return self

    @property
    def B(self) -> int:
        return len(self.z_samples)

    def rejects(self, threshold: float = 0.05) -> bool:
        return self.asl < threshold


class PredictionInterval(BaseModel):
    """Equal-tail prediction interval with nominal content 1 - alpha"""

    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    alpha: float
    source: str = ""

    @model_validator(mode="after")
    def _check(self) -> "PredictionInterval":
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if self.lower > self.upper:
            raise InvalidInputError("interval lower bound exceeds upper bound")
        return self

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: Any) -> Any:
        return (np.asarray(y) >= self.lower) & (np.asarray(y) <= self.upper)


def level_key(level: float) -> str:
    """Stable string key for conventional significance levels"""
    return f"{level:g}"


CONVENTIONAL_LEVELS: List[float] = [0.01, 0.05, 0.1]
