"""Versioned JSON model files."""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

import numpy as np

from ..errors import SchemaMismatch
from ..features import FeatureSchema, Imputer
from .forest import ForestModel, ForestParams
from .tree import TreeModel, TreeParams

FORMAT = "tmd-model"
VERSION = 1


def _tree_to_dict(t: TreeModel) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "counts": t.counts.tolist(),
        "decrease": t.decrease.tolist(),
        "fraction": t.fraction.tolist(),
    }


def _tree_from_dict(d: dict, n_features: int, n_classes: int, params: TreeParams) -> TreeModel:
    return TreeModel(
        feature=np.asarray(d["feature"], dtype=np.int64),
        threshold=np.asarray(d["threshold"], dtype=np.float64),
        left=np.asarray(d["left"], dtype=np.int64),
        right=np.asarray(d["right"], dtype=np.int64),
        counts=np.asarray(d["counts"], dtype=np.int64).reshape(-1, n_classes),
        decrease=np.asarray(d["decrease"], dtype=np.float64),
        fraction=np.asarray(d["fraction"], dtype=np.float64),
        n_features=n_features,
        params=params,
    )


def _tree_params(d: dict) -> TreeParams:
    return TreeParams(**d)


def model_to_dict(model: TreeModel | ForestModel) -> dict:
    schema = model.schema
    out = {
        "format": FORMAT,
        "version": VERSION,
        "schema_hash": schema.hash if schema is not None else None,
        "schema": schema.to_dict() if schema is not None else None,
        "n_features": model.n_features,
        "imputer": None,
    }
    if model.imputer is not None:
        out["imputer"] = {
            "means": model.imputer.means.tolist(),
            "unobserved": model.imputer.unobserved.tolist(),
        }
    if isinstance(model, ForestModel):
        p = model.params
        out.update(
            kind="forest",
            n_classes=model.n_classes,
            seed=p.seed,
            params={
                "n_trees": p.n_trees,
                "features_per_split": p.features_per_split,
                "bootstrap": p.bootstrap,
                "seed": p.seed,
                "tree": dataclasses.asdict(p.tree),
            },
            importance=model.importance.tolist(),
            trees=[_tree_to_dict(t) for t in model.trees],
        )
    else:
        out.update(
            kind="tree",
            n_classes=model.n_classes,
            seed=None,
            params=dataclasses.asdict(model.params),
            trees=[_tree_to_dict(model)],
        )
    return out


def model_from_dict(d: dict, expected_schema_hash: str | None = None) -> TreeModel | ForestModel:
    if d.get("format") != FORMAT:
        raise ValueError("not a model file")
    if d.get("version") != VERSION:
        raise ValueError(f"unsupported model file version {d.get('version')}")
    schema = FeatureSchema.from_dict(d["schema"]) if d.get("schema") else None
    if schema is not None and schema.hash != d["schema_hash"]:
        raise SchemaMismatch("model file is inconsistent: schema hash does not match schema")
    if expected_schema_hash is not None and d["schema_hash"] != expected_schema_hash:
        raise SchemaMismatch(f"model schema {d['schema_hash']} != expected {expected_schema_hash}")
    imputer = None
    if d.get("imputer"):
        imputer = Imputer(
            np.asarray(d["imputer"]["means"], dtype=np.float64),
            np.asarray(d["imputer"]["unobserved"], dtype=bool),
        )
    F, C = d["n_features"], d["n_classes"]
    if d["kind"] == "forest":
        p = d["params"]
        params = ForestParams(
            n_trees=p["n_trees"],
            features_per_split=p["features_per_split"],
            bootstrap=p["bootstrap"],
            seed=p["seed"],
            tree=_tree_params(p["tree"]),
        )
        trees = [_tree_from_dict(t, F, C, params.tree) for t in d["trees"]]
        return ForestModel(trees, params, F, C, np.asarray(d["importance"]), schema, imputer)
    tree = _tree_from_dict(d["trees"][0], F, C, _tree_params(d["params"]))
    return dataclasses.replace(tree, schema=schema, imputer=imputer)


def save_model(model: TreeModel | ForestModel, path: str | os.PathLike) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(model_to_dict(model)), encoding="utf-8")
    os.replace(tmp, path)


def load_model(path: str | os.PathLike, expected_schema_hash: str | None = None) -> TreeModel | ForestModel:
    """Load a model file; refuses when ``expected_schema_hash`` does not match."""
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")), expected_schema_hash)
