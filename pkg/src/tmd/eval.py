"""Experiment harness: multiclass accuracy, class-vs-class matrices, sensor
importance, leave-one-user-out and external recognizer label mapping."""

from __future__ import annotations

import csv
import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import (
    SENSOR_SETS,
    SensorSet,
    SplitSpec,
    WindowedDataset,
    leave_user_out,
    select_sensor_set,
    split,
)
from .errors import EmptyTestSet, MissingClass, UnknownWindowId
from .ingest import ActivityClass
from .models import ForestParams, fit_model, prepare

Pair = tuple[ActivityClass, ActivityClass]


def pair_name(pair: Pair) -> str:
    return "-".join(c.name[0] for c in pair)


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    classes: list[ActivityClass]
    confusion: np.ndarray  # rows: true class, columns: predicted class
    provenance: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    @property
    def support(self) -> dict[ActivityClass, int]:
        return {c: int(n) for c, n in zip(self.classes, self.confusion.sum(axis=1))}

    @property
    def recall(self) -> dict[ActivityClass, float]:
        rows = self.confusion.sum(axis=1)
        return {c: float(self.confusion[i, i] / rows[i]) if rows[i] else float("nan") for i, c in enumerate(self.classes)}

    @property
    def precision(self) -> dict[ActivityClass, float]:
        cols = self.confusion.sum(axis=0)
        return {c: float(self.confusion[i, i] / cols[i]) if cols[i] else float("nan") for i, c in enumerate(self.classes)}

    def to_dict(self) -> dict:
        return {
            "classes": [c.name.lower() for c in self.classes],
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "total": self.total,
            "precision": {c.name.lower(): v for c, v in self.precision.items()},
            "recall": {c.name.lower(): v for c, v in self.recall.items()},
            "support": {c.name.lower(): v for c, v in self.support.items()},
            "provenance": self.provenance,
        }


def confusion_report(y_true, y_pred, classes: Iterable[int] = (), provenance: dict | None = None) -> EvaluationReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    labels = sorted(set(int(c) for c in classes) | set(y_true.tolist()) | set(y_pred.tolist()))
    pos = {c: i for i, c in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(cm, ([pos[c] for c in y_true.tolist()], [pos[c] for c in y_pred.tolist()]), 1)
    return EvaluationReport([ActivityClass(c) for c in labels], cm, provenance or {})


def evaluate(model, test: WindowedDataset, provenance: dict | None = None) -> EvaluationReport:
    """Confusion matrix of ``model`` on ``test``, imputing with the model's training means."""
    if len(test) == 0:
        raise EmptyTestSet("test set is empty")
    pred = model.predict(prepare(model, test))
    classes = getattr(model, "classes", ())
    prov = {"n_test": len(test), "schema_hash": test.schema.hash}
    prov.update(provenance or {})
    return confusion_report(test.y, pred, classes, prov)


def train_and_evaluate(train, test, params, jobs: int = 1, provenance: dict | None = None):
    model = fit_model(train, params, jobs=jobs)
    return model, evaluate(model, test, provenance)


def multiclass_table(
    dataset: WindowedDataset,
    sensor_sets: Sequence[SensorSet] = SENSOR_SETS,
    algorithms: Mapping[str, object] | None = None,
    spec: SplitSpec = SplitSpec(),
    jobs: int = 1,
) -> dict[tuple[str, str], EvaluationReport]:
    """Overall accuracy per (sensor set, algorithm) on one shared split."""
    algorithms = algorithms or {"RF": ForestParams(seed=spec.seed)}
    train_all, test_all = split(dataset, spec)
    out = {}
    for s in sensor_sets:
        train, test = select_sensor_set(train_all, s), select_sensor_set(test_all, s)
        for name, params in algorithms.items():
            _, report = train_and_evaluate(
                train, test, params, jobs, {"sensor_set": s.name, "algorithm": name, "seed": spec.seed}
            )
            out[(s.name, name)] = report
    return out


# ---------------------------------------------------------------------------
# class-vs-class
# ---------------------------------------------------------------------------


def _pairs(dataset: WindowedDataset, classes=None) -> list[Pair]:
    present = dataset.classes
    if classes is not None:
        classes = sorted(ActivityClass.parse(c) for c in classes)
        missing = [c.title for c in classes if c not in present]
        if missing:
            raise MissingClass(f"no windows for {', '.join(missing)}")
        present = classes
    if len(present) < 2:
        raise MissingClass("need at least two classes for class-vs-class experiments")
    return list(combinations(present, 2))


def _pair_models(dataset, sensor_sets, params, spec, classes, jobs):
    for s in sensor_sets:
        restricted = select_sensor_set(dataset, s)
        for pair in _pairs(dataset, classes):
            train, test = split(restricted.filter_classes(pair), spec)
            prov = {"pair": pair_name(pair), "sensor_set": s.name, "seed": spec.seed}
            model, report = train_and_evaluate(train, test, params, jobs, prov)
            yield pair, s, model, report


@dataclass(frozen=True, eq=False)
class PairwiseMatrix:
    accuracy: dict[tuple[Pair, str], float]
    reports: dict[tuple[Pair, str], EvaluationReport] = field(default_factory=dict)

    def get(self, a: ActivityClass, b: ActivityClass, sensor_set: str) -> float:
        pair = tuple(sorted((ActivityClass.parse(a), ActivityClass.parse(b))))
        return self.accuracy[(pair, sensor_set)]

    @property
    def pairs(self) -> list[Pair]:
        return list(dict.fromkeys(p for p, _ in self.accuracy))

    @property
    def sensor_sets(self) -> list[str]:
        return list(dict.fromkeys(s for _, s in self.accuracy))

    def rows(self) -> list[dict]:
        return [
            {"pair": pair_name(p), "class_a": p[0].name.lower(), "class_b": p[1].name.lower(),
             "sensor_set": s, "accuracy": acc}
            for (p, s), acc in self.accuracy.items()
        ]


def pairwise_matrix(
    dataset: WindowedDataset,
    sensor_sets: Sequence[SensorSet] = SENSOR_SETS,
    params=None,
    spec: SplitSpec = SplitSpec(),
    classes=None,
    jobs: int = 1,
) -> PairwiseMatrix:
    """Accuracy of a dedicated two-class model for every unordered class pair.

    The dataset is filtered to the pair and split with ``spec``; no
    re-balancing happens inside a pair.
    """
    params = params or ForestParams(seed=spec.seed)
    acc, reports = {}, {}
    for pair, s, _, report in _pair_models(dataset, sensor_sets, params, spec, classes, jobs):
        acc[(pair, s.name)] = report.accuracy
        reports[(pair, s.name)] = report
    return PairwiseMatrix(acc, reports)


@dataclass(frozen=True, eq=False)
class ImportanceMap:
    """Importance per (pair, sensor set) over feature columns.

    Columns of sensors outside a sensor set are absent from that entry,
    never zero.
    """

    entries: dict[tuple[Pair, str], dict[str, float]]
    columns: list[str]

    def sensor_importance(self, pair: Pair, sensor_set: str) -> dict[str, float]:
        out: dict[str, float] = {}
        for col, v in self.entries[(pair, sensor_set)].items():
            sensor = col.rsplit("_", 1)[0]
            out[sensor] = out.get(sensor, 0.0) + v
        return out

    def rows(self) -> list[dict]:
        rows = []
        for (p, s), imp in self.entries.items():
            for col in self.columns:
                rows.append({"pair": pair_name(p), "sensor_set": s, "feature": col,
                             "importance": imp.get(col, "")})
        return rows


def importance_map(
    dataset: WindowedDataset,
    sensor_sets: Sequence[SensorSet] = SENSOR_SETS,
    params: ForestParams | None = None,
    spec: SplitSpec = SplitSpec(),
    classes=None,
    jobs: int = 1,
) -> ImportanceMap:
    params = params or ForestParams(seed=spec.seed)
    entries = {}
    for pair, s, model, _ in _pair_models(dataset, sensor_sets, params, spec, classes, jobs):
        entries[(pair, s.name)] = dict(zip(model.schema.columns, model.importance.tolist()))
    universe = [c for c in dataset.schema.columns if any(c in e for e in entries.values())]
    return ImportanceMap(entries, universe)


def pairwise_regression(
    dataset: WindowedDataset,
    sensor_set: SensorSet | None = None,
    params=None,
    spec: SplitSpec = SplitSpec(),
    jobs: int = 1,
) -> dict[Pair, tuple[float, float]]:
    """Per pair: (dedicated pair model accuracy, multiclass model accuracy on the same windows).

    Stratified splits pick test sessions per class, so the pair's test set is
    exactly the multiclass test set restricted to the pair.
    """
    params = params or ForestParams(seed=spec.seed)
    data = select_sensor_set(dataset, sensor_set) if sensor_set is not None else dataset
    train, test = split(data, spec)
    multi = fit_model(train, params, jobs=jobs)
    pred = multi.predict(prepare(multi, test))
    out = {}
    for pair in _pairs(data):
        mask = np.isin(test.y, [int(c) for c in pair])
        ptrain, ptest = split(data.filter_classes(pair), spec)
        if set(ptest.window_ids) != set(np.asarray(test.window_ids, dtype=object)[mask]):
            raise RuntimeError("pair split does not match the multiclass split; use a stratified spec")
        _, report = train_and_evaluate(ptrain, ptest, params, jobs)
        out[pair] = (report.accuracy, float(np.mean(pred[mask] == test.y[mask])))
    return out


# ---------------------------------------------------------------------------
# leave one user out
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LooEntry:
    user: str
    classes: tuple[ActivityClass, ...]
    n_windows: int
    accuracy_all: dict[str, float]  # trained on every class of the other users
    accuracy_own: dict[str, float]  # trained only on this user's classes


@dataclass(frozen=True)
class LooReport:
    entries: list[LooEntry]
    baselines: dict[str, float]  # held-out-session accuracy with every user in training

    def rows(self) -> list[dict]:
        return [
            {"user": e.user, "n_classes": len(e.classes), "n_windows": e.n_windows, "sensor_set": s,
             "accuracy_all_classes": e.accuracy_all[s], "accuracy_own_classes": e.accuracy_own[s],
             "baseline": self.baselines.get(s, "")}
            for e in self.entries
            for s in e.accuracy_all
        ]


def leave_one_out(
    dataset: WindowedDataset,
    user: str,
    sensor_sets: Sequence[SensorSet] = SENSOR_SETS,
    params: ForestParams | None = None,
    jobs: int = 1,
) -> LooEntry:
    """Test on every window of ``user`` after training without them.

    The all-classes model may answer with a class the user never recorded;
    that counts as an error.
    """
    params = params or ForestParams()
    acc_all, acc_own = {}, {}
    classes = None
    n = 0
    for s in sensor_sets:
        data = select_sensor_set(dataset, s)
        train_all, test = leave_user_out(data, user)
        classes = tuple(test.classes)
        n = len(test)
        train_own, _ = leave_user_out(data, user, classes)
        acc_all[s.name] = train_and_evaluate(train_all, test, params, jobs)[1].accuracy
        if len(train_own) == len(train_all):
            acc_own[s.name] = acc_all[s.name]
        else:
            acc_own[s.name] = train_and_evaluate(train_own, test, params, jobs)[1].accuracy
    return LooEntry(user, classes, n, acc_all, acc_own)


def loo_report(
    dataset: WindowedDataset,
    sensor_sets: Sequence[SensorSet] = SENSOR_SETS,
    params: ForestParams | None = None,
    spec: SplitSpec = SplitSpec(),
    users: Sequence[str] | None = None,
    jobs: int = 1,
) -> LooReport:
    """Leave-one-out for every user, ordered by number of classes they recorded."""
    params = params or ForestParams(seed=spec.seed)
    users = list(users) if users is not None else dataset.users
    entries = [leave_one_out(dataset, u, sensor_sets, params, jobs) for u in users]
    entries.sort(key=lambda e: len(e.classes))
    table = multiclass_table(dataset, sensor_sets, {"RF": params}, spec, jobs)
    baselines = {s: r.accuracy for (s, _), r in table.items()}
    return LooReport(entries, baselines)


# ---------------------------------------------------------------------------
# external recognizer
# ---------------------------------------------------------------------------


class ExternalLabel(Enum):
    IN_VEHICLE = "in_vehicle"
    ON_BICYCLE = "on_bicycle"
    ON_FOOT = "on_foot"
    RUNNING = "running"
    WALKING = "walking"
    STILL = "still"
    TILTING = "tilting"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, text: str) -> "ExternalLabel":
        key = str(text).strip().lower().replace(" ", "_").replace("-", "_")
        key = {"vehicle": "in_vehicle", "bike": "on_bicycle", "on_bike": "on_bicycle"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            return cls.UNKNOWN


VEHICLE_GROUP = frozenset({ActivityClass.BUS, ActivityClass.CAR, ActivityClass.TRAIN})

_MAPPING = {
    ExternalLabel.RUNNING: ActivityClass.WALKING,
    ExternalLabel.WALKING: ActivityClass.WALKING,
    ExternalLabel.ON_FOOT: ActivityClass.WALKING,
    ExternalLabel.STILL: ActivityClass.STILL,
    ExternalLabel.IN_VEHICLE: VEHICLE_GROUP,
}


def map_external_label(label: ExternalLabel | str) -> ActivityClass | frozenset | None:
    """Our class for an external label, :data:`VEHICLE_GROUP` for in-vehicle, ``None`` if unmapped."""
    if not isinstance(label, ExternalLabel):
        label = ExternalLabel.parse(label)
    return _MAPPING.get(label)


def is_credited(label: ExternalLabel | str, truth: ActivityClass) -> bool:
    mapped = map_external_label(label)
    if mapped is None:
        return False
    if isinstance(mapped, frozenset):
        return truth in mapped
    return mapped == truth


@dataclass(frozen=True)
class ExternalEval:
    total: int
    classified: int
    distribution: dict[ActivityClass, Counter]  # true class -> external label counts
    credited: dict[ActivityClass, int]  # windows whose mapped label matches the truth

    @property
    def coverage(self) -> Fraction:
        return Fraction(self.classified, self.total) if self.total else Fraction(0)

    @property
    def coverage_percent(self) -> float:
        return float(self.coverage * 100)

    def shares(self) -> dict[ActivityClass, dict[ExternalLabel, float]]:
        out = {}
        for c, counts in self.distribution.items():
            n = sum(counts.values())
            out[c] = {lab: counts.get(lab, 0) / n for lab in ExternalLabel} if n else {}
        return out

    def rows(self) -> list[dict]:
        rows = []
        for c, counts in self.distribution.items():
            n = sum(counts.values())
            for lab in ExternalLabel:
                rows.append({"true_class": c.name.lower(), "external_label": lab.value,
                             "count": counts.get(lab, 0), "share": counts.get(lab, 0) / n if n else 0.0})
        return rows


def external_label_eval(
    predictions: Iterable[tuple[str, ExternalLabel | str]], truth: WindowedDataset
) -> ExternalEval:
    """Tally external predictions against the true class of each window.

    A window counts as classified when the recognizer's answer for it is
    anything but ``UNKNOWN``; windows without an answer are tallied as
    ``UNKNOWN`` too. When a window has several predictions the last one wins.
    """
    ids = truth.window_ids
    row_of = {w: i for i, w in enumerate(ids)}
    answer: dict[int, ExternalLabel] = {}
    for wid, label in predictions:
        if wid not in row_of:
            raise UnknownWindowId(f"window {wid!r} not in the truth set")
        answer[row_of[wid]] = label if isinstance(label, ExternalLabel) else ExternalLabel.parse(label)
    distribution: dict[ActivityClass, Counter] = {}
    credited: dict[ActivityClass, int] = {}
    for i, y in enumerate(truth.y.tolist()):
        c = ActivityClass(y)
        lab = answer.get(i, ExternalLabel.UNKNOWN)
        distribution.setdefault(c, Counter())[lab] += 1
        credited[c] = credited.get(c, 0) + int(is_credited(lab, c))
    order = sorted(distribution)
    return ExternalEval(
        len(ids),
        sum(lab is not ExternalLabel.UNKNOWN for lab in answer.values()),
        {c: distribution[c] for c in order},
        {c: credited[c] for c in order},
    )


def read_external_predictions(path: str | os.PathLike) -> list[tuple[str, ExternalLabel]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(row["window_id"].strip(), ExternalLabel.parse(row["external_label"])) for row in csv.DictReader(fh)]


def write_rows(rows: list[dict], path: str | os.PathLike, columns: Sequence[str] | None = None) -> None:
    """Write a plot-ready table atomically."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
    os.replace(tmp, path)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


__all__ = [
    "EvaluationReport", "ExternalEval", "ExternalLabel", "ImportanceMap", "LooEntry", "LooReport",
    "PairwiseMatrix", "VEHICLE_GROUP", "confusion_report", "evaluate", "external_label_eval",
    "importance_map", "is_credited", "leave_one_out", "loo_report", "map_external_label",
    "multiclass_table", "pair_name", "pairwise_matrix", "pairwise_regression",
    "read_external_predictions", "train_and_evaluate", "write_rows",
]
