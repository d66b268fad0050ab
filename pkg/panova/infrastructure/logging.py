"""
Centralized logging for panova studies
Handles the study trace (stage starts/ends, ASLs, coverages), per-replicate
bootstrap logs and per-model fit diagnostics. Every logger writes JSON lines.
File location: ./panova/infrastructure/logging.py
"""

# imports
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import orjson

# ──────────────────────────────────────────────────────────────────────────────
# Helper classes
# ──────────────────────────────────────────────────────────────────────────────

_DEFAULT_LOG_DIR = Path("out/logs")


class AppendOnlyFileLogger:
    """Append-only JSON-lines logger with ISO timestamp on every record"""

    def __init__(self, filepath: str | Path):
        self.path = Path(filepath)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append_json(self, data: Dict[str, Any]) -> None:
        """Append one structured event"""
        entry = {"timestamp": datetime.now().isoformat(timespec="seconds"), **data}
        line = orjson.dumps(entry, option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS)
        with self.path.open("ab") as fh:
            fh.write(line + b"\n")

    def append(self, message: str) -> None:
        """Append a free-text event"""
        self.append_json({"message": message.strip()})

    def log_warning(self, message: str, **extra: Any) -> None:
        """Record a non-fatal issue"""
        self.append_json({"level": "warning", "message": message.strip(), **extra})

    def read(self) -> List[Dict[str, Any]]:
        """All records written so far"""
        if not self.path.exists():
            return []
        return [orjson.loads(line) for line in self.path.read_bytes().splitlines() if line.strip()]


# ──────────────────────────────────────────────────────────────────────────────
# Operational classes
# ──────────────────────────────────────────────────────────────────────────────

class StudyTraceLogger(AppendOnlyFileLogger):
    """
    Stage-level trace of a study run.
    File: <log_dir>/study_trace.log
    """

    FILENAME = "study_trace.log"

    def __init__(self, log_dir: Path = _DEFAULT_LOG_DIR):
        super().__init__(Path(log_dir) / self.FILENAME)

    def log_stage(self, stage: str, status: str, **extra: Any) -> None:
        """Record the start or end of a study stage"""
        self.append_json({"stage": stage, "status": status, **extra})

    def log_result(self, stage: str, name: str, value: Any) -> None:
        """Record one headline number (an ASL, a coverage, a weight)"""
        self.append_json({"stage": stage, "result": name, "value": value})


class ReplicateLogger(AppendOnlyFileLogger):
    """
    Per-replicate bootstrap log: seeds, redraws and failures.
    File: <log_dir>/replicates-<study>.log
    """

    def __init__(self, study: str, log_dir: Path = _DEFAULT_LOG_DIR):
        super().__init__(Path(log_dir) / f"replicates-{study}.log")

    def log_replicate(
        self,
        index: int,
        seed: int,
        redraws: int = 0,
        status: str = "ok",
        detail: Optional[str] = None,
    ) -> None:
        """Record how replicate index ended"""
        self.append_json(
            {"replicate": index, "seed": seed, "redraws": redraws, "status": status, "detail": detail}
        )


class FitLogger(AppendOnlyFileLogger):
    """
    Model fitting diagnostics: IRLS traces, separation fallbacks, lambda choices.
    File: <log_dir>/fits.log
    """

    FILENAME = "fits.log"

    def __init__(self, log_dir: Path = _DEFAULT_LOG_DIR):
        super().__init__(Path(log_dir) / self.FILENAME)

    def log_fit(self, model: str, **diagnostics: Any) -> None:
        """Record one fitted model"""
        self.append_json({"model": model, **diagnostics})


# ──────────────────────────────────────────────────────────────────────────────
# Core utilities (factories)
# ──────────────────────────────────────────────────────────────────────────────

def get_study_logger(log_dir: Optional[Path] = None) -> StudyTraceLogger:
    """Get the study trace logger rooted at log_dir"""
    return StudyTraceLogger(log_dir or _DEFAULT_LOG_DIR)


def get_replicate_logger(study: str, log_dir: Optional[Path] = None) -> ReplicateLogger:
    """Get the replicate logger for one study"""
    return ReplicateLogger(study, log_dir or _DEFAULT_LOG_DIR)


def get_fit_logger(log_dir: Optional[Path] = None) -> FitLogger:
    """Get the shared fit diagnostics logger"""
    return FitLogger(log_dir or _DEFAULT_LOG_DIR)
