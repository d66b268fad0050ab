"""
Replicate-parallel execution and per-index random streams
Bootstrap replicates, CV folds and null resamples are independent tasks;
they run through joblib with a worker cap and return in index order.
File location: ./panova/infrastructure/parallel.py
"""

# imports
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt
from tqdm import tqdm

from panova.errors import InvalidInputError, NumericalError, ReplicateError
from panova.infrastructure.logging import ReplicateLogger

T = TypeVar("T")
R = TypeVar("R")


def philox_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream for task `index` under a base seed (stream = seed + index)"""
    return np.random.Generator(np.random.Philox(int(seed) + int(index)))


def child_seed(seed: int, *keys: int) -> int:
    """Independent base seed for a named sub-task (method index, replicate, fold)"""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def run_with_redraws(
    draw: Callable[[np.random.Generator], R],
    seed: int,
    index: int,
    max_redraws: int,
    logger: Optional[ReplicateLogger] = None,
) -> R:
    """
    Run one replicate, redrawing from the same stream on input or numerical failure.

    Raises:
        ReplicateError: when max_redraws attempts all fail; carries the per-attempt log
    """
    rng = philox_rng(seed, index)
    failures: List[Dict[str, Any]] = []
    retrying = Retrying(
        stop=stop_after_attempt(max_redraws),
        retry=retry_if_exception_type((NumericalError, InvalidInputError)),
        reraise=False,
    )
    try:
        for attempt in retrying:
            with attempt:
                try:
                    result = draw(rng)
                except (NumericalError, InvalidInputError) as exc:
                    failures.append({"attempt": attempt.retry_state.attempt_number, "error": str(exc)})
                    raise
    except RetryError as exc:
        if logger is not None:
            logger.log_replicate(index, seed + index, redraws=len(failures), status="failed", detail=failures[-1]["error"])
        raise ReplicateError(
            f"replicate {index}: no usable resample after {max_redraws} draws", failures
        ) from exc
    if logger is not None and failures:
        logger.log_replicate(index, seed + index, redraws=len(failures), status="redrawn", detail=failures[-1]["error"])
    return result


def parallel_map(
    func: Callable[[T], R],
    items: Sequence[T] | Iterable[T],
    n_jobs: int = 1,
    progress: bool = False,
    desc: str = "",
) -> List[R]:
    """
    Apply func to every item, preserving input order.

    n_jobs == 1 runs inline so tracebacks stay readable; otherwise joblib's
    loky backend is used with at most n_jobs workers.
    """
    items = list(items)
    iterator = tqdm(items, desc=desc, disable=not progress, leave=False)
    if n_jobs <= 1 or len(items) <= 1:
        return [func(item) for item in iterator]
    return list(Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in iterator))
