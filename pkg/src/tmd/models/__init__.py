"""From-scratch CART tree and random forest.

Any classifier fits the pipeline if it offers ``predict(X)`` and
``predict_proba(X)`` over feature matrices and is produced by a trainer
``(X, y, n_classes) -> model``. :func:`make_trainer` builds the trainers for
the two models shipped here.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Protocol, Union

import numpy as np

from ..errors import SchemaMismatch
from ..features import FeatureVector, Imputer
from ..ingest import ActivityClass
from .forest import ForestModel, ForestParams, train_forest
from .selection import GridSearchResult, cross_validate_grid, stratified_folds
from .serialize import load_model, save_model
from .tree import Split, TreeModel, TreeParams, best_split, gini, train_tree


class Classifier(Protocol):
    def predict(self, X: np.ndarray) -> np.ndarray: ...

    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...


Params = Union[TreeParams, ForestParams]
Trainer = Callable[[np.ndarray, np.ndarray, int], Classifier]


def make_trainer(params: Params, jobs: int = 1) -> Trainer:
    if isinstance(params, ForestParams):
        return lambda X, y, C: train_forest(X, y, params, C, jobs)
    if isinstance(params, TreeParams):
        return lambda X, y, C: train_tree(X, y, params, None, C)
    raise TypeError(f"no trainer for {type(params).__name__}")


def fit_model(train, params: Params, n_classes: int = len(ActivityClass), jobs: int = 1, trainer: Trainer | None = None):
    """Fit the imputer on ``train`` and a model on the imputed rows.

    ``train`` is a :class:`~tmd.dataset.WindowedDataset`. The returned model
    carries the fitted imputer and the feature schema.
    """
    imputer = Imputer.fit(train.X, train.missing)
    X = imputer.transform(train.X, train.missing)
    model = (trainer or make_trainer(params, jobs))(X, train.y, n_classes)
    if dataclasses.is_dataclass(model) and hasattr(model, "imputer"):
        return dataclasses.replace(model, imputer=imputer, schema=train.schema)
    model.imputer, model.schema = imputer, train.schema
    return model


def prepare(model, x) -> np.ndarray:
    """Feature matrix for ``model``: width-checked and imputed with its training means."""
    if isinstance(x, FeatureVector):
        X, missing = x.values[None, :], x.missing[None, :]
    elif hasattr(x, "X") and hasattr(x, "missing"):
        schema = getattr(model, "schema", None)
        if schema is not None and x.schema.hash != schema.hash:
            raise SchemaMismatch(f"dataset schema {x.schema.hash} != model schema {schema.hash}")
        X, missing = x.X, x.missing
    else:
        X = np.asarray(x, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        missing = np.isnan(X)
    width = getattr(model, "n_features", X.shape[1])
    if X.shape[1] != width:
        raise SchemaMismatch(f"model expects {width} features, got {X.shape[1]}")
    imputer = getattr(model, "imputer", None)
    if imputer is not None:
        X = imputer.transform(X, missing)
    return X


def predict(model, x):
    """Class of a single :class:`FeatureVector`, or an array of classes for a matrix/dataset."""
    labels = model.predict(prepare(model, x))
    if isinstance(x, FeatureVector):
        return ActivityClass(int(labels[0]))
    return labels


def predict_proba(model, x) -> np.ndarray:
    proba = model.predict_proba(prepare(model, x))
    return proba[0] if isinstance(x, FeatureVector) else proba


__all__ = [
    "Classifier",
    "ForestModel",
    "ForestParams",
    "GridSearchResult",
    "Split",
    "TreeModel",
    "TreeParams",
    "best_split",
    "cross_validate_grid",
    "fit_model",
    "gini",
    "load_model",
    "make_trainer",
    "predict",
    "predict_proba",
    "prepare",
    "save_model",
    "stratified_folds",
    "train_forest",
    "train_tree",
]
