"""
High-level runner facade for panova studies.
Ties configuration, loggers and study dispatch together and writes the run
manifest (scenario, seed, package versions, outputs, runtimes).
File location: ./panova/experiments/runner.py
"""

# imports
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

from panova.config import AppConfig, TestConfig
from panova.errors import ConfigError
from panova.experiments.binomial import prepare_binomial, run_binomial_grid_study
from panova.experiments.external import prepare_external, run_external_stacking_study
from panova.experiments.reporting import StudyResult, StudySetup, study_dir
from panova.experiments.scenarios import ScenarioSpec, load_scenario
from panova.experiments.shrinkage import load_shrinkage_data, prepare_shrinkage, run_shrinkage_study
from panova.experiments.sweep import run_n_sweep
from panova.infrastructure.io import write_json
from panova.infrastructure.logging import get_replicate_logger, get_study_logger
from panova.vartest.bootstrap import TermTestTable, test_all_terms

MANIFEST_NAME = "manifest.json"
VERSIONED_PACKAGES = ("panova", "numpy", "scipy", "pandas", "pydantic", "joblib", "orjson", "PyYAML", "tenacity", "tqdm")

StudyFn = Callable[[Any, AppConfig, Optional[Path]], StudyResult]

STUDIES: Dict[str, StudyFn] = {
    "shrinkage": run_shrinkage_study,
    "binomial": run_binomial_grid_study,
    "n_sweep": run_n_sweep,
    "external": run_external_stacking_study,
}


def package_versions() -> Dict[str, Optional[str]]:
    versions: Dict[str, Optional[str]] = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


class StudyRunner:
    """
    Core runner class that ties configuration and studies together.
    Provides a simple run interface and records every run in a manifest.
    """

    def __init__(self, config: AppConfig):
        """
        Args:
            config (AppConfig): Application-wide configuration object
        """
        self.config = config
        self.trace = get_study_logger(config.runtime.log_dir)

    def run(self, scenario: ScenarioSpec, out_dir: Optional[Path] = None) -> StudyResult:
        """
        Executes one study and writes <out>/<name>/manifest.json.

        Returns:
            StudyResult: output paths and headline numbers
        """
        study = STUDIES.get(scenario.study)
        if study is None:
            raise ConfigError(f"unknown study {scenario.study!r}; available: {', '.join(STUDIES)}")
        out_dir = Path(out_dir or self.config.runtime.out_dir)
        self.trace.log_stage("run", "start", study=scenario.study, name=scenario.name, seed=scenario.seed)
        started = time.perf_counter()
        result = study(scenario, self.config, out_dir)
        elapsed = time.perf_counter() - started
        manifest = {
            "study": scenario.study,
            "name": scenario.name,
            "seed": scenario.seed,
            "scenario": scenario.model_dump(mode="json"),
            "config": self.config.model_dump(mode="json", exclude={"runtime"}),
            "versions": package_versions(),
            "outputs": {k: str(v) for k, v in sorted(result.outputs.items())},
            "summary": result.summary,
            "runtimes": {"seconds": elapsed},
        }
        result.outputs["manifest"] = write_json(study_dir(out_dir, scenario.name) / MANIFEST_NAME, manifest)
        self.trace.log_stage("run", "done", study=scenario.study, name=scenario.name, seconds=round(elapsed, 3))
        return result

    def run_file(self, path: str | Path, out_dir: Optional[Path] = None) -> StudyResult:
        """Load a JSON or YAML scenario file and run it"""
        return self.run(load_scenario(path), out_dir)

    def prepare(self, scenario: ScenarioSpec) -> StudySetup:
        """
        Fits a scenario's model list once without testing or writing anything.

        Raises:
            ConfigError: the study has no single fitted tree (the n sweep)
        """
        if scenario.study == "shrinkage":
            d, x_new, _ = load_shrinkage_data(scenario)
            return prepare_shrinkage(scenario, self.config, d, x_new)[1]
        if scenario.study == "binomial":
            return prepare_binomial(scenario, self.config)[1]
        if scenario.study == "external":
            return prepare_external(scenario, self.config)[1]
        raise ConfigError(f"study {scenario.study!r} has no single fitted tree; use 'study' to run it")

    def test(
        self,
        scenario: ScenarioSpec,
        taus: Optional[Sequence[float]] = None,
        B: Optional[int] = None,
        J: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> TermTestTable:
        """Bootstrap test of every term of the scenario's tree; arguments override the scenario"""
        setup = self.prepare(scenario)
        taus = list(taus or scenario.taus)
        B = B or scenario.B
        J = J or scenario.J
        seed = scenario.seed if seed is None else seed
        test_config = TestConfig(
            B=B, J=J, taus=taus, asl_threshold=self.config.test.asl_threshold, null_method=scenario.null_method
        )
        runtime = self.config.runtime
        return test_all_terms(
            setup.pipeline, setup.data, taus, B, J, seed, test_config,
            max_redraws=self.config.fit.max_redraws, n_jobs=runtime.threads,
            replicate_logger=get_replicate_logger(scenario.name, runtime.log_dir),
            trace_logger=self.trace, progress=runtime.progress,
        )
