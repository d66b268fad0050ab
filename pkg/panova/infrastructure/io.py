"""
File formats for panova
CSV tables (full round-trip precision plus rounded companion columns),
JSON documents via orjson, and dataset / external-prediction ingestion
through pandas.
File location: ./panova/infrastructure/io.py
"""

# imports
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import orjson
import pandas as pd

from panova.errors import ConfigError, InvalidInputError

FULL_PRECISION = "%.17g"
ROUNDED_SUFFIX = "_rounded"

# ──────────────────────────────────────────────────────────────────────────────
# JSON
# ──────────────────────────────────────────────────────────────────────────────

_JSON_OPTIONS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS


def dumps_json(data: Any) -> bytes:
    return orjson.dumps(data, option=_JSON_OPTIONS)


def write_json(path: str | Path, data: Any) -> Path:
    """Write data as indented JSON, creating parent directories"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_json(data) + b"\n")
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    try:
        return orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


# ──────────────────────────────────────────────────────────────────────────────
# CSV tables
# ──────────────────────────────────────────────────────────────────────────────

def table_frame(
    rows: Iterable[Dict[str, Any]],
    rounded: Optional[Dict[str, int]] = None,
) -> pd.DataFrame:
    """
    Build a DataFrame from row dicts.

    rounded maps a numeric column to the number of decimals of a human-readable
    companion column "<name>_rounded" inserted right after it.
    """
    frame = pd.DataFrame(list(rows))
    for column, decimals in (rounded or {}).items():
        if column in frame.columns:
            position = frame.columns.get_loc(column) + 1
            frame.insert(position, f"{column}{ROUNDED_SUFFIX}", frame[column].astype(float).round(decimals))
    return frame


def write_csv(path: str | Path, frame: pd.DataFrame) -> Path:
    """Write a table with 17-significant-digit floats (rounded companions formatted by their own decimals)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = frame.copy()
    for column in out.columns:
        if out[column].dtype.kind != "f":
            continue
        if column.endswith(ROUNDED_SUFFIX):
            out[column] = out[column].map(lambda v: f"{v:g}")
        else:
            out[column] = out[column].map(lambda v: FULL_PRECISION % v)
    out.to_csv(path, index=False, lineterminator="\n")
    return path


# ──────────────────────────────────────────────────────────────────────────────
# Inputs
# ──────────────────────────────────────────────────────────────────────────────

def read_csv(path: str | Path, required: Sequence[str] = ()) -> pd.DataFrame:
    """Read a header-row CSV, rejecting missing values and missing columns"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise InvalidInputError(f"{path}: missing column(s) {missing}")
    if frame.isna().any().any():
        bad_rows = frame.index[frame.isna().any(axis=1)].tolist()
        # header is line 1
        raise InvalidInputError(f"{path}: missing values on line(s) {[r + 2 for r in bad_rows[:10]]}")
    return frame


def read_z_samples(path: str | Path) -> np.ndarray:
    """Ratio samples stored one per line, or as a CSV with a 'z' column"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    if path.suffix.lower() == ".json":
        data = read_json(path)
        values = data.get("z_samples", data) if isinstance(data, dict) else data
        return np.asarray(values, dtype=float)
    frame = pd.read_csv(path, header=None, comment="#")
    if isinstance(frame.iloc[0, 0], str):
        frame = pd.read_csv(path, comment="#")
        if "z" not in frame.columns:
            raise InvalidInputError(f"{path}: expected a 'z' column")
        return frame["z"].to_numpy(dtype=float)
    return frame.iloc[:, 0].to_numpy(dtype=float)


def frame_records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return frame.to_dict(orient="records")
