"""
Pluggable candidate predictors
A learner turns a Dataset into a FittedModel. Cross-validated prediction
matrices, stacking and the studies only rely on this interface, so any
model family can be added next to the native penalized and GLM learners.
File location: ./panova/fit/learners.py
"""

# imports
from typing import Optional, Protocol, Tuple, runtime_checkable

from pydantic import BaseModel, ConfigDict, Field

from panova.config import FitConfig
from panova.fit.glm import fit_glm_with_fallback
from panova.fit.penalized import fit_penalized
from panova.types import Dataset, FittedModel, Link, PenaltySpec


@runtime_checkable
class Learner(Protocol):
    """Anything with a name and a fit(Dataset) -> FittedModel method"""

    name: str

    def fit(self, d: Dataset) -> FittedModel: ...


class PenalizedLearner(BaseModel):
    """Penalized linear regression at a fixed penalty"""

    model_config = ConfigDict(frozen=True)

    spec: PenaltySpec
    config: FitConfig = Field(default_factory=FitConfig)
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or self.spec.kind.value

    def fit(self, d: Dataset) -> FittedModel:
        return fit_penalized(d, self.spec, self.config)


class GLMLearner(BaseModel):
    """Binomial GLM on a variable subset; IRLS failures fall back to the ridge refit"""

    model_config = ConfigDict(frozen=True)

    link: Link
    variables: Tuple[int, ...] = ()
    config: FitConfig = Field(default_factory=FitConfig)

    @property
    def name(self) -> str:
        return f"{self.link.value}{list(self.variables)}"

    def fit(self, d: Dataset) -> FittedModel:
        return fit_glm_with_fallback(d, self.link, self.variables, self.config)
