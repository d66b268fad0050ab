"""
Configuration models for panova
All tunable constants of the fitting, averaging, testing and interval layers
live here, grouped by section and aggregated in AppConfig.

File location: ./panova/config.py
"""

# imports
import os
from pathlib import Path
from typing import List, Literal, Optional

import orjson
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from panova.errors import ConfigError


class FitConfig(BaseModel):
    """Settings for penalized regression, GLM fitting and per-model bootstraps"""

    lambda_grid_size: int = Field(100, ge=2)
    lambda_min_ratio: Optional[float] = Field(None, gt=0.0, lt=1.0)
    cv_folds: int = Field(5, ge=2)
    one_se_rule: bool = False
    enet_alpha: float = Field(0.5, ge=0.0, le=1.0)
    adaptive_exponent: float = Field(1.0, gt=0.0)
    cd_tol: float = Field(1e-10, gt=0.0)
    cd_max_sweeps: int = Field(10_000, ge=1)
    cd_kkt_tol: float = Field(1e-7, gt=0.0)
    irls_tol: float = Field(1e-8, gt=0.0)
    irls_max_iter: int = Field(100, ge=1)
    eta_clamp: float = Field(30.0, gt=0.0)
    prob_clamp: float = Field(1e-10, gt=0.0, lt=0.5)
    separation_ridge_lambda: float = Field(1e-4, gt=0.0)
    pred_var_bootstrap: int = Field(200, ge=50)
    max_redraws: int = Field(10, ge=1)


class AveragingConfig(BaseModel):
    """Settings for the stacking QP and BIC weights"""

    qp_max_iter: int = Field(10_000, ge=1)
    qp_tol: float = Field(1e-12, gt=0.0)
    kkt_tol: float = Field(1e-8, gt=0.0)


class TestConfig(BaseModel):
    """Settings for the two-layer bootstrap test"""

    __test__ = False  # keep pytest from collecting this model

    B: int = Field(200, ge=2)
    J: int = Field(10_000, ge=1000)
    taus: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.1])
    asl_threshold: float = Field(0.05, gt=0.0, lt=1.0)
    null_method: Literal["shift", "literal"] = "shift"

    @field_validator("taus")
    @classmethod
    def _taus_in_unit_interval(cls, taus: List[float]) -> List[float]:
        if not taus or any(not 0.0 < t < 1.0 for t in taus):
            raise ValueError("every tau must lie in (0, 1)")
        return taus


class IntervalConfig(BaseModel):
    """Settings for prediction intervals, coverage and model-list selection"""

    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    delta: float = Field(0.02, gt=0.0)
    coverage_B: int = Field(1000, ge=100)
    eval_draws: int = Field(100_000, ge=10_000)
    quantile_tol: float = Field(1e-10, gt=0.0)


class RuntimeConfig(BaseModel):
    """Process-level settings: workers, output and log locations"""

    threads: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    out_dir: Path = Path("out")
    log_dir: Path = Path("out/logs")
    progress: bool = True


class AppConfig(BaseModel):
    """Global application configuration"""

    model_config = ConfigDict(extra="forbid")

    fit: FitConfig = Field(default_factory=FitConfig)
    averaging: AveragingConfig = Field(default_factory=AveragingConfig)
    test: TestConfig = Field(default_factory=TestConfig)
    intervals: IntervalConfig = Field(default_factory=IntervalConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    @classmethod
    def default_for_development(cls) -> "AppConfig":
        """Defaults plus environment overrides"""
        return cls().from_env()

    def from_env(self) -> "AppConfig":
        """Return a copy with PANOVA_THREADS applied when set"""
        threads = os.getenv("PANOVA_THREADS")
        if threads is None:
            return self
        try:
            runtime = self.runtime.model_copy(update={"threads": max(1, int(threads))})
        except ValueError as exc:
            raise ConfigError(f"PANOVA_THREADS must be an integer, got {threads!r}") from exc
        return self.model_copy(update={"runtime": runtime})

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        """Load a JSON or YAML config file; unknown sections are rejected"""
        data = load_mapping(path)
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


# ──────────────────────────────────────────────────────────────────────────────
# File helpers
# ──────────────────────────────────────────────────────────────────────────────

def load_mapping(path: str | Path) -> dict:
    """Read a JSON or YAML document that must decode to a mapping"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(raw)
        else:
            data = orjson.loads(raw)
    except (orjson.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data
