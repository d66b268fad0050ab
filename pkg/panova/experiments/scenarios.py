"""
Study scenarios and their data generators
A ScenarioSpec is one of four pydantic models told apart by the `study`
field: shrinkage (sparse linear model, five penalties, stacking), binomial
(links × variable-sets grid with BIC weights), n_sweep (the binomial design
over a list of sample sizes) and external (stacking over prediction files
written by outside learners).
File location: ./panova/experiments/scenarios.py
"""

# imports
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from panova.config import load_mapping
from panova.errors import ConfigError
from panova.fit.dataset import load_dataset
from panova.fit.links import inverse_link
from panova.types import Dataset, Link, PenaltyKind

DEFAULT_METHODS = [PenaltyKind.LASSO, PenaltyKind.RIDGE, PenaltyKind.ALASSO, PenaltyKind.ENET, PenaltyKind.AENET]
SIMULATED_BETA = (0.75, 0.25, -0.3, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


# ──────────────────────────────────────────────────────────────────────────────
# Helper classes
# ──────────────────────────────────────────────────────────────────────────────

class ScenarioBase(BaseModel):
    """Pipeline parameters shared by every study"""

    model_config = ConfigDict(extra="forbid")

    name: str
    seed: int = Field(0, ge=0)
    folds: int = Field(5, ge=2)
    B: int = Field(200, ge=2)
    J: int = Field(10_000, ge=1000)
    taus: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.1])
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    delta: float = Field(0.02, gt=0.0)
    null_method: Literal["shift", "literal"] = "shift"

    @field_validator("taus")
    @classmethod
    def _taus_in_unit_interval(cls, taus: List[float]) -> List[float]:
        if not taus or any(not 0.0 < t < 1.0 for t in taus):
            raise ValueError("every tau must lie in (0, 1)")
        return taus


class DataSource(BaseModel):
    """A CSV dataset plus the covariates of the case to predict"""

    model_config = ConfigDict(extra="forbid")

    path: Path
    response: str
    trials: Optional[str] = None
    features: Optional[List[str]] = None
    x_new: List[float]
    trials_new: Optional[int] = Field(None, ge=1)

    def load(self) -> Tuple[Dataset, np.ndarray]:
        if not self.path.exists():
            raise ConfigError(f"dataset not found: {self.path}")
        d = load_dataset(self.path, self.response, self.trials, self.features)
        x_new = np.asarray(self.x_new, dtype=float)
        if x_new.shape != (d.p,):
            raise ConfigError(f"x_new has {x_new.size} entries, dataset has {d.p} features")
        return d, x_new


class ShrinkageScenario(ScenarioBase):
    """Sparse gaussian linear model: n rows, p columns, n_nonzero coefficients ~ N(beta_mean, beta_sd²)"""

    study: Literal["shrinkage"] = "shrinkage"
    n: int = Field(50, ge=5)
    p: int = Field(100, ge=1)
    n_nonzero: int = Field(5, ge=0)
    beta_mean: float = 5.0
    beta_sd: float = Field(1.5, ge=0.0)
    noise_sd: float = Field(1.0, gt=0.0)
    methods: List[PenaltyKind] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    enet_alpha: float = Field(0.5, ge=0.0, le=1.0)
    pred_var_B: int = Field(200, ge=50)
    eval_draws: int = Field(100_000, ge=10_000)
    coverage_mode: Literal["mixture", "generator"] = "mixture"
    coverage_B: int = Field(0, ge=0)
    sweep_taus: List[float] = Field(default_factory=lambda: [round(0.01 * k, 2) for k in range(1, 21)])
    data: Optional[DataSource] = None

    @model_validator(mode="after")
    def _check_design(self) -> "ShrinkageScenario":
        if not self.methods:
            raise ValueError("shrinkage study needs at least one method")
        if self.n_nonzero > self.p:
            raise ValueError("n_nonzero exceeds p")
        if 0 < self.coverage_B < 100:
            raise ValueError("coverage_B must be 0 (off) or >= 100")
        return self


class BinomialScenario(ScenarioBase):
    """Binomial GLM data: X ~ N(0, 1), Y ~ Binomial(trials, link⁻¹(Xβ))"""

    study: Literal["binomial"] = "binomial"
    n: int = Field(50, ge=5)
    beta: List[float] = Field(default_factory=lambda: list(SIMULATED_BETA))
    trials: int = Field(30, ge=1)
    true_link: Link = Link.LOGIT
    links: List[Link] = Field(default_factory=lambda: list(Link))
    max_set_size: Optional[int] = Field(2, ge=1)
    prior: Optional[List[List[float]]] = None
    target: Literal["probability", "count"] = "count"
    data: Optional[DataSource] = None

    @property
    def p(self) -> int:
        return len(self.beta)


class SweepScenario(BinomialScenario):
    """The binomial design repeated over sample sizes"""

    study: Literal["n_sweep"] = "n_sweep"
    n_list: List[int] = Field(default_factory=lambda: list(range(20, 130, 10)))
    replicates: int = Field(1, ge=1)
    run_tests: bool = True

    @field_validator("n_list")
    @classmethod
    def _ascending(cls, n_list: List[int]) -> List[int]:
        if not n_list or any(n < 5 for n in n_list) or any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ValueError("n_list must be ascending with every n >= 5")
        return n_list


class ExternalScenario(ScenarioBase):
    """Stacking over externally produced out-of-fold and held-out predictions"""

    study: Literal["external"] = "external"
    responses: Path
    response: str = "y"
    oof_predictions: Path
    heldout_predictions: Path
    heldout_outcomes: Optional[Path] = None

    @model_validator(mode="after")
    def _paths_exist(self) -> "ExternalScenario":
        for path in (self.responses, self.oof_predictions, self.heldout_predictions, self.heldout_outcomes):
            if path is not None and not Path(path).exists():
                raise ValueError(f"file not found: {path}")
        return self


ScenarioSpec = Annotated[
    Union[ShrinkageScenario, BinomialScenario, SweepScenario, ExternalScenario],
    Field(discriminator="study"),
]
STUDY_NAMES = ("shrinkage", "binomial", "n_sweep", "external")

_SCENARIO_ADAPTER = TypeAdapter(ScenarioSpec)


# ──────────────────────────────────────────────────────────────────────────────
# Core operations
# ──────────────────────────────────────────────────────────────────────────────

def parse_scenario(data: dict) -> ScenarioSpec:
    """Validate a mapping; unknown study names list the available ones"""
    study = data.get("study")
    if study not in STUDY_NAMES:
        raise ConfigError(f"unknown study {study!r}; available: {', '.join(STUDY_NAMES)}")
    try:
        return _SCENARIO_ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid {study} scenario: {exc}") from exc


def load_scenario(path: str | Path) -> ScenarioSpec:
    return parse_scenario(load_mapping(path))


def simulate_sparse_linear(s: ShrinkageScenario, rng: np.random.Generator) -> Tuple[Dataset, np.ndarray, np.ndarray]:
    """
    n + 1 rows from y = Xβ + ε with X, ε gaussian. The first n rows are the
    training data, the last row's covariates are the prediction point.

    Returns:
        (training data, x_new, true beta)
    """
    beta = np.zeros(s.p)
    active = rng.choice(s.p, size=s.n_nonzero, replace=False)
    beta[np.sort(active)] = rng.normal(s.beta_mean, s.beta_sd, size=s.n_nonzero)
    d, x_new = simulate_linear_rows(s, beta, rng)
    return d, x_new, beta


def simulate_linear_rows(s: ShrinkageScenario, beta: np.ndarray, rng: np.random.Generator) -> Tuple[Dataset, np.ndarray]:
    """Training data and prediction point for a fixed coefficient vector"""
    X = rng.standard_normal((s.n + 1, s.p))
    y = X @ beta + rng.normal(0.0, s.noise_sd, size=s.n + 1)
    d = Dataset(X=X[: s.n], y=y[: s.n], feature_names=tuple(f"x{j + 1}" for j in range(s.p)))
    return d, X[s.n]


def draw_linear_outcome(s: ShrinkageScenario, x_new: np.ndarray, beta: np.ndarray, rng: np.random.Generator, size: Optional[int] = None):
    return float(x_new @ beta) + rng.normal(0.0, s.noise_sd, size=size)


def simulate_binomial(s: BinomialScenario, n: int, rng: np.random.Generator) -> Tuple[Dataset, np.ndarray]:
    """n binomial rows from the scenario's generator plus a fresh prediction point"""
    beta = np.asarray(s.beta, dtype=float)
    X = rng.standard_normal((n + 1, beta.size))
    prob = inverse_link(s.true_link, X[:n] @ beta)
    y = rng.binomial(s.trials, prob)
    d = Dataset(
        X=X[:n],
        y=y,
        trials=np.full(n, s.trials),
        feature_names=tuple(f"x{j + 1}" for j in range(beta.size)),
    )
    return d, X[n]


def draw_binomial_outcome(s: BinomialScenario, x_new: np.ndarray, rng: np.random.Generator) -> float:
    prob = float(inverse_link(s.true_link, np.array([x_new @ np.asarray(s.beta)]))[0])
    return float(rng.binomial(s.trials, prob))
