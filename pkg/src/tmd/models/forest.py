"""Bagged random forest over :mod:`tmd.models.tree`."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .tree import TreeModel, TreeParams, _check_width, check_training_data, train_tree


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    features_per_split: int | None = None  # None: floor(sqrt(F))
    bootstrap: bool = True
    seed: int = 0
    tree: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")

    def resolve_features(self, n_features: int) -> int:
        k = self.features_per_split or max(1, math.isqrt(n_features))
        if k > n_features:
            raise ValueError(f"features_per_split={k} exceeds {n_features} features")
        return k


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list[TreeModel]
    params: ForestParams
    n_features: int
    n_classes: int
    importance: np.ndarray
    schema: object = None
    imputer: object = None

    @property
    def classes(self) -> np.ndarray:
        seen = np.zeros(self.n_classes, dtype=bool)
        for t in self.trees:
            seen[t.classes] = True
        return np.flatnonzero(seen)

    def votes(self, X) -> np.ndarray:
        X = _check_width(X, self.n_features)
        votes = np.zeros((len(X), self.n_classes), dtype=np.int64)
        rows = np.arange(len(X))
        for t in self.trees:
            np.add.at(votes, (rows, t.predict(X)), 1)
        return votes

    def predict_proba(self, X) -> np.ndarray:
        return self.votes(X) / len(self.trees)

    def predict(self, X) -> np.ndarray:
        # majority vote; np.argmax keeps the lowest class index on ties
        return np.argmax(self.votes(X), axis=1)


def _grow(X, y, params: ForestParams, k: int, C: int, seq: np.random.SeedSequence) -> TreeModel:
    rng = np.random.default_rng(seq)
    N, F = X.shape
    if params.bootstrap:
        idx = rng.integers(0, N, size=N)
        X, y = X[idx], y[idx]

    def sampler(n_features: int) -> np.ndarray:
        return np.sort(rng.choice(n_features, size=k, replace=False))

    return train_tree(X, y, params.tree, sampler if k < F else None, C)


def train_forest(X, y, params: ForestParams = ForestParams(), n_classes: int | None = None, jobs: int = 1) -> ForestModel:
    """Train ``params.n_trees`` trees, each on its own seed stream.

    Tree i draws its bootstrap sample and per-node feature subsets from the
    i-th child of ``SeedSequence(params.seed)``, so results do not depend on
    ``jobs``. Importance of feature f sums ``node fraction * impurity
    decrease`` over all nodes splitting on f, normalized to 1.
    """
    X, y = check_training_data(X, y)
    F = X.shape[1]
    C = n_classes if n_classes is not None else int(y.max()) + 1
    k = params.resolve_features(F)
    seqs = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            trees = list(pool.map(lambda s: _grow(X, y, params, k, C, s), seqs))
    else:
        trees = [_grow(X, y, params, k, C, s) for s in seqs]
    raw = np.sum([t.raw_importance for t in trees], axis=0)
    total = raw.sum()
    importance = raw / total if total > 0 else raw
    return ForestModel(trees, params, F, C, importance)
