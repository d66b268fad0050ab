"""
Command-line surface for panova
Five commands, each writing its tables under --out:

  decompose  variance decomposition of a stored tree, of given terms, or of a
             scenario's fitted model list
  test       bootstrap test of H0: E[term / total] >= tau from stored ratio
             samples or from a scenario pipeline
  stack      stacking weights and decomposition from external prediction files
  study      run a study scenario end to end (writes a manifest)
  select     pick the model list with nominal coverage and least variance

Exit codes: 0 success, 1 numerical or replicate failure, 2 usage or input error.
File location: ./panova/cli.py
"""

# imports
import argparse
import sys
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from panova.config import AppConfig, load_mapping
from panova.core.tree import decompose_k, flatten, tree_from_json, tree_from_terms, tree_to_json
from panova.decompose.report import report_rows, write_report
from panova.errors import ConfigError, InvalidInputError, NumericalError, ReplicateError
from panova.experiments.external import load_external_predictions, stacked_tree
from panova.experiments.reporting import study_dir, write_tau_sweep, write_test_table
from panova.experiments.runner import StudyRunner
from panova.experiments.scenarios import load_scenario, parse_scenario
from panova.infrastructure.io import read_csv, read_json, read_z_samples, table_frame, write_csv, write_json
from panova.intervals.coverage import held_out_coverage, sample_mixture
from panova.intervals.interval import per_model_table, prediction_interval
from panova.intervals.selection import select_model_list, write_selection_report
from panova.vartest.asl import asl_test, tau_sweep

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class Command(str, Enum):
    DECOMPOSE = "decompose"
    TEST = "test"
    STACK = "stack"
    STUDY = "study"
    SELECT = "select"


class RunConfig(BaseModel):
    """One validated command invocation"""

    model_config = ConfigDict(extra="forbid")

    command: Command
    inputs: List[Path] = Field(default_factory=list)
    scenario: Optional[Path] = None
    outcomes: Optional[Path] = None
    out: Path = Path("out")
    seed: Optional[int] = Field(None, ge=0)

    @field_validator("inputs")
    @classmethod
    def _inputs_exist(cls, paths: List[Path]) -> List[Path]:
        missing = [str(p) for p in paths if not p.exists()]
        if missing:
            raise ValueError(f"file(s) not found: {', '.join(missing)}")
        return paths

    @field_validator("scenario", "outcomes")
    @classmethod
    def _path_exists(cls, path: Optional[Path]) -> Optional[Path]:
        if path is not None and not path.exists():
            raise ValueError(f"file not found: {path}")
        return path

    @model_validator(mode="after")
    def _seed_for_random_commands(self) -> "RunConfig":
        # a scenario carries its own seed; held-out outcomes need none
        if self.command is Command.TEST and self.scenario is None and self.seed is None:
            raise ValueError("test needs --seed")
        if self.command is Command.SELECT and self.outcomes is None and self.seed is None:
            raise ValueError("select without --outcomes samples outcomes and needs --seed")
        return self


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _app_config(args: argparse.Namespace) -> AppConfig:
    config = AppConfig.from_file(args.app_config) if args.app_config else AppConfig()
    config = config.from_env()
    update = {"out_dir": args.out, "log_dir": args.out / "logs"}
    if args.threads is not None:
        update["threads"] = args.threads
    if args.quiet:
        update["progress"] = False
    return config.model_copy(update={"runtime": config.runtime.model_copy(update=update)})


def _scenario_with_overrides(path: Path, args: argparse.Namespace):
    """Scenario file with --seed/--B/--J/--tau/--alpha/--delta applied and revalidated"""
    data = load_mapping(path)
    overrides = {
        "seed": args.seed,
        "B": getattr(args, "B", None),
        "J": getattr(args, "J", None),
        "taus": getattr(args, "tau", None),
        "alpha": getattr(args, "alpha", None),
        "delta": getattr(args, "delta", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_scenario(data)


def _print_report(report) -> None:
    print(f"{'Source':<14}{'Variance':>14}{'Proportion':>12}")
    for row in report_rows(report):
        print(f"{row['source']:<14}{row['variance']:>14.6g}{row['proportion']:>12.4g}")


def _verdict(asl: float, threshold: float) -> str:
    return "reject H0" if asl < threshold else "retain H0"


# ──────────────────────────────────────────────────────────────────────────────
# Commands
# ──────────────────────────────────────────────────────────────────────────────

def cmd_decompose(args: argparse.Namespace, config: AppConfig) -> int:
    run = RunConfig(
        command=Command.DECOMPOSE,
        inputs=[args.tree] if args.tree else [],
        scenario=args.config,
        out=args.out,
        seed=args.seed,
    )
    if args.tree:
        tree = tree_from_json(read_json(args.tree))
    elif args.terms:
        tree = tree_from_terms(args.terms)
    elif run.scenario is not None:
        tree = StudyRunner(config).prepare(_scenario_with_overrides(run.scenario, args)).tree
    else:
        raise ConfigError("decompose needs --tree, --terms or --config")
    report = decompose_k(tree)
    write_report(report, run.out)
    write_json(run.out / "tree.json", tree_to_json(tree))
    _print_report(report)
    return EXIT_OK


def cmd_test(args: argparse.Namespace, config: AppConfig) -> int:
    run = RunConfig(
        command=Command.TEST,
        inputs=[args.z] if args.z else [],
        scenario=args.config,
        out=args.out,
        seed=args.seed,
    )
    threshold = config.test.asl_threshold
    J = args.J or config.test.J
    if run.scenario is not None:
        scenario = _scenario_with_overrides(run.scenario, args)
        table = StudyRunner(config).test(scenario)
        write_test_table(table, run.out / "tests.csv")
        z_bars = table.z_bars()
        for k, source in enumerate(table.sources):
            for tau, outcome in zip(table.taus, table.outcomes[k]):
                print(f"{source:<14} z̄={z_bars[k]:.4g} tau={tau:g} ASL={outcome.asl:.4g} {_verdict(outcome.asl, threshold)}")
        return EXIT_OK
    if not run.inputs:
        raise ConfigError("test needs --z or --config")

    z = read_z_samples(run.inputs[0])
    taus = args.tau or config.test.taus
    null_method = config.test.null_method
    if len(taus) == 1:
        outcome = asl_test(z, taus[0], J, run.seed, null_method)
        write_json(run.out / "test.json", outcome.model_dump(mode="json"))
        print(f"z̄={outcome.z_bar:.4g} tau={outcome.tau:g} ASL={outcome.asl:.4g} {_verdict(outcome.asl, threshold)}")
        return EXIT_OK
    sweep = tau_sweep(z, taus, J, run.seed, threshold, null_method)
    write_json(run.out / "test.json", [o.model_dump(mode="json") for o in sweep.outcomes])
    write_tau_sweep(sweep, run.out / "tau_sweep.csv")
    for o in sweep.outcomes:
        print(f"z̄={o.z_bar:.4g} tau={o.tau:g} ASL={o.asl:.4g} {_verdict(o.asl, threshold)}")
    print(f"smallest rejected tau: {sweep.crossing if sweep.crossing is not None else 'none'}")
    return EXIT_OK


def cmd_stack(args: argparse.Namespace, config: AppConfig) -> int:
    run = RunConfig(command=Command.STACK, inputs=[args.oof, args.heldout, args.responses], out=args.out, seed=args.seed)
    data = load_external_predictions(args.oof, args.heldout, args.responses, args.response)
    tree = stacked_tree(data.oof, data.components, data.models, config.averaging)
    report = decompose_k(tree)
    alpha = args.alpha or config.intervals.alpha
    weights = {m: float(w) for m, w in zip(data.models, tree.weights[0])}
    write_report(report, run.out)
    write_json(run.out / "weights.json", weights)
    write_json(run.out / "tree.json", tree_to_json(tree))
    rows = per_model_table(flatten(tree), alpha)
    write_csv(run.out / "models.csv", table_frame(rows, rounded={"weight": 2, "variance": 2}))
    for model, w in weights.items():
        print(f"{model:<14}{w:>10.4f}")
    _print_report(report)
    return EXIT_OK


def cmd_study(args: argparse.Namespace, config: AppConfig) -> int:
    run = RunConfig(command=Command.STUDY, scenario=args.config, out=args.out, seed=args.seed)
    if run.scenario is None:
        raise ConfigError("study needs --config")
    scenario = _scenario_with_overrides(run.scenario, args) if _has_overrides(args) else load_scenario(run.scenario)
    result = StudyRunner(config).run(scenario, run.out)
    print(f"{result.study} '{result.name}' -> {study_dir(run.out, result.name)}")
    for key, path in sorted(result.outputs.items()):
        print(f"  {key:<22}{path}")
    return EXIT_OK


def _has_overrides(args: argparse.Namespace) -> bool:
    return any(getattr(args, k, None) is not None for k in ("seed", "B", "J", "tau", "alpha", "delta"))


def cmd_select(args: argparse.Namespace, config: AppConfig) -> int:
    run = RunConfig(
        command=Command.SELECT,
        inputs=list(args.tree),
        outcomes=args.outcomes,
        out=args.out,
        seed=args.seed,
    )
    candidates = [tree_from_json(read_json(p)) for p in run.inputs]
    labels = [p.stem for p in run.inputs]
    alpha = args.alpha or config.intervals.alpha
    delta = args.delta or config.intervals.delta
    if run.outcomes is not None:
        outcomes = read_csv(run.outcomes, required=[args.response])[args.response].to_numpy(dtype=float)
        coverages = [held_out_coverage(prediction_interval(flatten(t), alpha), outcomes) for t in candidates]
        result = select_model_list(candidates, alpha, delta, coverages=coverages, labels=labels)
    else:
        if not 0 <= args.reference < len(candidates):
            raise ConfigError(f"--reference must index one of the {len(candidates)} candidates")
        reference = flatten(candidates[args.reference])
        result = select_model_list(
            candidates, alpha, delta, g=args.g, seed=run.seed,
            outcome_sampler=lambda rng: float(sample_mixture(reference, 1, rng)[0]),
            labels=labels,
        )
    write_selection_report(result, run.out / "selection.csv")
    for row in result.rows():
        mark = "*" if row["chosen"] else " "
        print(f"{mark} {row['candidate']:<20} coverage={row['coverage']:.3f} variance={row['variance']:.4g}")
    if result.flagged:
        print(result.flag)
    return EXIT_OK


# ──────────────────────────────────────────────────────────────────────────────
# Parser
# ──────────────────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario file (JSON or YAML)")
    common.add_argument("--app-config", type=Path, help="library settings file (JSON or YAML)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker cap (falls back to PANOVA_THREADS)")
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--quiet", action="store_true", help="no progress bars")

    parser = argparse.ArgumentParser(prog="panova", description="Predictive variance decomposition for model averaging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="decompose a tree's predictive variance")
    p.add_argument("--tree", type=Path, help="factor tree JSON")
    p.add_argument("--terms", type=_float_list, help="between terms then the predictions term")

    p = sub.add_parser("test", parents=[common], help="bootstrap test of a term's share")
    p.add_argument("--z", type=Path, help="ratio samples: one per line, a 'z' column or JSON")
    p.add_argument("--tau", type=_float_list)
    p.add_argument("--B", type=int)
    p.add_argument("--J", type=int)

    p = sub.add_parser("stack", parents=[common], help="stack externally fitted learners")
    p.add_argument("--oof", type=Path, required=True, help="out-of-fold predictions CSV")
    p.add_argument("--heldout", type=Path, required=True, help="held-out predictive moments CSV")
    p.add_argument("--responses", type=Path, required=True, help="training responses CSV")
    p.add_argument("--response", default="y")
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("study", parents=[common], help="run a study scenario")
    p.add_argument("--tau", type=_float_list)
    p.add_argument("--B", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("select", parents=[common], help="select a model list by coverage and variance")
    p.add_argument("--tree", type=Path, action="append", required=True, help="candidate tree JSON (repeat)")
    p.add_argument("--outcomes", type=Path, help="held-out outcomes CSV")
    p.add_argument("--response", default="y")
    p.add_argument("--reference", type=int, default=0, help="candidate whose predictive generates outcomes")
    p.add_argument("--g", type=int, default=100, help="number of generated outcomes")
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    return parser


COMMANDS = {
    "decompose": cmd_decompose,
    "test": cmd_test,
    "stack": cmd_stack,
    "study": cmd_study,
    "select": cmd_select,
}


# ──────────────────────────────────────────────────────────────────────────────
# Entry point
# ──────────────────────────────────────────────────────────────────────────────

def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _app_config(args)
        return COMMANDS[args.command](args, config)
    except (ConfigError, InvalidInputError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ReplicateError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
