"""
Dataset ingestion and fold assignment
File location: ./panova/fit/dataset.py
"""

# imports
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from panova.errors import InvalidInputError
from panova.infrastructure.io import read_csv
from panova.infrastructure.parallel import philox_rng
from panova.types import Dataset


def load_dataset(
    path: str | Path,
    response: str,
    trials: Optional[str] = None,
    features: Optional[Sequence[str]] = None,
) -> Dataset:
    """
    Read a header-row CSV into a Dataset.

    Args:
        path: CSV file
        response: name of the response column
        trials: name of the binomial trials column, if any
        features: feature columns; defaults to every other column in file order
    """
    required = [response] + ([trials] if trials else []) + list(features or [])
    frame = read_csv(path, required=required)
    if features is None:
        features = [c for c in frame.columns if c not in (response, trials)]
    try:
        X = frame[list(features)].to_numpy(dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric feature column ({exc})") from exc
    return Dataset(
        X=X,
        y=frame[response].to_numpy(dtype=float),
        trials=frame[trials].to_numpy() if trials else None,
        feature_names=tuple(features),
        response_name=response,
    )


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold label per row: a seeded permutation dealt round-robin into `folds` groups"""
    if not 2 <= folds <= n:
        raise InvalidInputError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    order = philox_rng(seed).permutation(n)
    labels = np.empty(n, dtype=int)
    labels[order] = np.arange(n) % folds
    return labels
