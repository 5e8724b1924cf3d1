"""Stratified k-fold grid search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import TooFewSamples


@dataclass(frozen=True, eq=False)
class GridSearchResult:
    best_params: object
    best_index: int
    mean_scores: np.ndarray  # one per candidate, grid order
    fold_scores: np.ndarray  # (candidates, k)
    folds: np.ndarray  # fold id of every row


def stratified_folds(y, k: int, seed: int = 0) -> np.ndarray:
    """Fold id per row.

    Rows are shuffled within each class, the classes are laid end to end and
    the sequence is dealt round-robin, so fold sizes differ by at most one
    and every class is spread as evenly as its size allows.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(y) < k:
        raise TooFewSamples(f"{len(y)} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    sequence = []
    for c in np.unique(y):
        rows = np.flatnonzero(y == c)
        sequence.extend(rows[rng.permutation(len(rows))])
    folds = np.empty(len(y), dtype=np.int64)
    folds[np.asarray(sequence)] = np.arange(len(y)) % k
    return folds


def cross_validate_grid(
    X,
    y,
    grid: Sequence,
    k: int = 10,
    seed: int = 0,
    n_classes: int | None = None,
    trainer_factory: Callable | None = None,
) -> GridSearchResult:
    """Mean fold accuracy per candidate; the first best candidate wins.

    ``trainer_factory(params)`` returns a ``(X, y, n_classes) -> model``
    callable; the default handles tree and forest parameters.
    """
    from . import make_trainer

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not grid:
        raise ValueError("grid is empty")
    C = n_classes if n_classes is not None else int(y.max()) + 1
    folds = stratified_folds(y, k, seed)
    scores = np.zeros((len(grid), k))
    for ci, params in enumerate(grid):
        fit = (trainer_factory or make_trainer)(params)
        for f in range(k):
            test = folds == f
            model = fit(X[~test], y[~test], C)
            scores[ci, f] = np.mean(model.predict(X[test]) == y[test])
    means = scores.mean(axis=1)
    best = int(np.argmax(means))
    return GridSearchResult(grid[best], best, means, scores, folds)
