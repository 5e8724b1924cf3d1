"""CART classification tree with Gini impurity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from ..errors import EmptyNode, EmptyTrainingSet, NonFiniteFeature, SchemaMismatch

# Decreases closer than this are treated as equal, so tie-breaking does not
# depend on floating-point summation order.
TIE_TOLERANCE = 1e-12

LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self) -> None:
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


def gini(class_counts) -> float:
    """1 - sum_c (n_c / N)^2."""
    if isinstance(class_counts, dict):
        class_counts = list(class_counts.values())
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("gini of an empty node")
    p = counts / total
    return float(1.0 - np.dot(p, p))


class Split(NamedTuple):
    column: int
    threshold: float
    decrease: float


def _column_scores(x: np.ndarray, onehot: np.ndarray, min_leaf: int):
    """Impurity decrease and threshold for every valid cut of one column."""
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    left = np.cumsum(onehot[order], axis=0)[:-1]
    total = onehot.sum(axis=0)
    right = total - left
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    purity = np.einsum("ij,ij->i", left, left) / n_left + np.einsum("ij,ij->i", right, right) / n_right
    decrease = (purity - np.dot(total, total) / n) / n
    decrease = np.where(valid, decrease, -np.inf)
    thresholds = (xs[:-1] + xs[1:]) / 2.0
    # midpoint of adjacent floats can round up onto the right value
    bad = thresholds >= xs[1:]
    thresholds[bad] = xs[:-1][bad]
    return decrease, thresholds


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    candidate_columns=None,
    n_classes: int | None = None,
    min_samples_leaf: int = 1,
) -> Split | None:
    """Best Gini split over midpoints of consecutive distinct values.

    Ties go to the lower column index, then the lower threshold. Returns
    ``None`` when no cut has a positive impurity decrease.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    if n < 2:
        return None
    C = n_classes if n_classes is not None else int(y.max()) + 1
    onehot = np.zeros((n, C))
    onehot[np.arange(n), y] = 1.0
    cols = range(X.shape[1]) if candidate_columns is None else sorted(int(c) for c in candidate_columns)
    scored = []
    best = -np.inf
    for j in cols:
        dec, thr = _column_scores(X[:, j], onehot, min_samples_leaf)
        top = dec.max()
        scored.append((j, dec, thr, top))
        best = max(best, top)
    if not best > TIE_TOLERANCE:
        return None
    for j, dec, thr, top in scored:
        if top >= best - TIE_TOLERANCE:
            hits = np.flatnonzero(dec >= best - TIE_TOLERANCE)
            # thresholds ascend with position; take the lowest
            pos = hits[np.argmin(thr[hits])]
            return Split(j, float(thr[pos]), float(dec[pos]))
    return None  # pragma: no cover


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Flat-array binary tree.

    Node 0 is the root. ``feature[i] == -1`` marks a leaf. ``counts`` holds
    the training class histogram of every node, ``fraction`` the share of
    the tree's training rows reaching it.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    decrease: np.ndarray
    fraction: np.ndarray
    n_features: int
    params: TreeParams = field(default_factory=TreeParams)
    schema: object = None
    imputer: object = None

    @property
    def n_classes(self) -> int:
        return self.counts.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def classes(self) -> np.ndarray:
        """Labels seen in training."""
        return np.flatnonzero(self.counts[0] > 0)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    @property
    def raw_importance(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        internal = self.feature != LEAF
        np.add.at(imp, self.feature[internal], self.fraction[internal] * self.decrease[internal])
        return imp

    @property
    def importance(self) -> np.ndarray:
        imp = self.raw_importance
        total = imp.sum()
        return imp / total if total > 0 else imp

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        X = _check_width(X, self.n_features)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while len(active):
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaf_counts = self.counts[self.apply(X)]
        return leaf_counts / leaf_counts.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum: lowest class index wins ties
        return np.argmax(self.counts[self.apply(X)], axis=1)


def _check_width(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_features:
        raise SchemaMismatch(f"model expects {n_features} features, got {X.shape[1]}")
    return X


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyTrainingSet("training matrix is empty")
    if len(y) != len(X):
        raise ValueError(f"{len(X)} rows but {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("training features contain NaN or inf; impute first")
    if y.min() < 0:
        raise ValueError("labels must be non-negative class indices")
    return X, y


def train_tree(
    X,
    y,
    params: TreeParams = TreeParams(),
    candidate_columns: Callable[[int], np.ndarray | None] | None = None,
    n_classes: int | None = None,
) -> TreeModel:
    """Grow a CART tree depth-first.

    ``candidate_columns`` is called once per node with the feature count and
    returns the columns that node may split on (``None`` for all of them).
    """
    X, y = check_training_data(X, y)
    N, F = X.shape
    C = n_classes if n_classes is not None else int(y.max()) + 1
    if y.max() >= C:
        raise ValueError(f"label {y.max()} out of range for {C} classes")

    feature, threshold, left, right, counts, decrease, size = [], [], [], [], [], [], []

    def new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[rows], minlength=C))
        decrease.append(0.0)
        size.append(len(rows))
        return len(feature) - 1

    root = new_node(np.arange(N))
    stack = [(root, np.arange(N), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if len(rows) < params.min_samples_split or np.count_nonzero(counts[node]) <= 1:
            continue
        cols = candidate_columns(F) if candidate_columns is not None else None
        found = best_split(X[rows], y[rows], cols, C, params.min_samples_leaf)
        if found is None:
            continue
        go_left = X[rows, found.column] <= found.threshold
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node] = found.column
        threshold[node] = found.threshold
        decrease[node] = found.decrease
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return TreeModel(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64).reshape(len(feature), C),
        decrease=np.asarray(decrease, dtype=np.float64),
        fraction=np.asarray(size, dtype=np.float64) / N,
        n_features=F,
        params=params,
    )
