"""
Out-of-fold prediction matrix
Entry (i, j) is learner j's prediction for case i from the fit that left
out case i's fold.
File location: ./panova/average/cv.py
"""

# imports
from typing import List, Sequence, Tuple

import numpy as np

from panova.errors import NumericalError, PanovaError
from panova.fit.dataset import fold_assignment
from panova.fit.learners import Learner
from panova.infrastructure.parallel import parallel_map
from panova.types import Dataset


def _fit_fold(d: Dataset, learners: Sequence[Learner], labels: np.ndarray, fold: int) -> Tuple[np.ndarray, np.ndarray]:
    test = np.flatnonzero(labels == fold)
    train = np.flatnonzero(labels != fold)
    train_data = d.take(train)
    block = np.empty((test.size, len(learners)))
    for j, learner in enumerate(learners):
        try:
            model = learner.fit(train_data)
        except PanovaError as exc:
            raise NumericalError(f"fold {fold} failed for model {learner.name!r}: {exc}") from exc
        block[:, j] = model.predict_many(d.X[test])
    return test, block


def cv_predictions(
    d: Dataset,
    learners: Sequence[Learner],
    folds: int,
    seed: int,
    n_jobs: int = 1,
) -> np.ndarray:
    """n×q out-of-fold predictions; folds run in parallel and merge by fold index"""
    labels = fold_assignment(d.n, folds, seed)
    blocks: List[Tuple[np.ndarray, np.ndarray]] = parallel_map(
        lambda f: _fit_fold(d, learners, labels, f), range(folds), n_jobs=n_jobs
    )
    preds = np.empty((d.n, len(learners)))
    for rows, block in blocks:
        preds[rows] = block
    return preds
