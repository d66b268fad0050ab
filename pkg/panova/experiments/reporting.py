"""
Study results and the tables they write
File location: ./panova/experiments/reporting.py
"""

# imports
from pathlib import Path
from typing import Any, Dict, List, NamedTuple

from panova.infrastructure.io import table_frame, write_csv
from panova.types import Dataset, FactorTree
from panova.vartest.asl import TauSweep
from panova.vartest.bootstrap import Pipeline, TermTestTable


class StudyResult(NamedTuple):
    """Files written by a study and the headline numbers for the run manifest"""

    name: str
    study: str
    outputs: Dict[str, Path]
    summary: Dict[str, Any]


class StudySetup(NamedTuple):
    """Training data, the fitted tree and the pipeline the bootstrap reruns"""

    data: Dataset
    tree: FactorTree
    pipeline: Pipeline


def outcome_rows(table: TermTestTable) -> List[Dict[str, Any]]:
    """One row per (term, tau)"""
    rows = []
    for term_index, source in enumerate(table.sources):
        for outcome in table.outcomes[term_index]:
            rows.append(
                {
                    "source": source,
                    "tau": outcome.tau,
                    "z_bar": outcome.z_bar,
                    "se": outcome.se,
                    "t_stat": outcome.t_stat,
                    "asl": outcome.asl,
                    "degenerate": outcome.degenerate,
                    "null_method": outcome.null_method,
                    "B": outcome.B,
                    "J": outcome.J,
                }
            )
    return rows


def write_test_table(table: TermTestTable, path: Path) -> Path:
    return write_csv(path, table_frame(outcome_rows(table), rounded={"z_bar": 3, "asl": 3}))


def sweep_rows(sweep: TauSweep) -> List[Dict[str, Any]]:
    return [
        {"tau": tau, "asl": o.asl, "z_bar": o.z_bar, "reject": o.asl < sweep.threshold}
        for tau, o in zip(sweep.taus, sweep.outcomes)
    ]


def write_tau_sweep(sweep: TauSweep, path: Path) -> Path:
    return write_csv(path, table_frame(sweep_rows(sweep), rounded={"asl": 3}))


def study_dir(out_dir: Path, name: str) -> Path:
    path = Path(out_dir) / name
    path.mkdir(parents=True, exist_ok=True)
    return path
