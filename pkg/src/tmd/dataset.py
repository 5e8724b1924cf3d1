"""Experiment datasets: sensor-set selection, class balancing and splitting."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSplit, EmptyClass, SchemaMismatch, UnknownSensor, UnknownUser
from .features import (
    AXIS_NAMES,
    STATISTICS,
    FeatureSchema,
    FeatureVector,
    WindowingConfig,
    featurize_session,
)
from .ingest import FEATURE_SENSORS, ActivityClass, RecordingSession, SensorKind


@dataclass(frozen=True)
class SensorSet:
    name: str
    members: frozenset

    def __post_init__(self) -> None:
        members = frozenset(self.members)
        if not members:
            raise ValueError(f"sensor set {self.name!r} is empty")
        for m in members:
            if not isinstance(m, SensorKind):
                raise UnknownSensor(f"{m!r} is not a known sensor")
            if m.excluded:
                raise ValueError(f"{m.value} is excluded from every sensor set")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_names(cls, name: str, sensors: Iterable[str]) -> "SensorSet":
        kinds = []
        for s in sensors:
            try:
                kinds.append(SensorKind(s.strip().lower()))
            except ValueError:
                raise UnknownSensor(f"unknown sensor {s!r}") from None
        return cls(name, frozenset(kinds))


D1 = SensorSet("D1", frozenset({SensorKind.ACCELEROMETER, SensorKind.GYROSCOPE, SensorKind.SOUND}))
D2 = SensorSet("D2", D1.members | {SensorKind.LINEAR_ACCELERATION, SensorKind.ROTATION_VECTOR})
D3 = SensorSet("D3", D2.members | {SensorKind.SPEED})
SENSOR_SETS = (D1, D2, D3)


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """Feature rows with their provenance.

    ``X`` holds NaN wherever ``missing`` is set. Row order is the order the
    windows were produced in (session by session, window index ascending).
    """

    schema: FeatureSchema
    X: np.ndarray
    missing: np.ndarray
    y: np.ndarray
    user_ids: np.ndarray
    session_ids: np.ndarray
    window_index: np.ndarray
    window_length: float = 5.0

    def __post_init__(self) -> None:
        n = len(self.y)
        X = np.asarray(self.X, dtype=np.float64).reshape(n, self.schema.feature_count)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "missing", np.asarray(self.missing, dtype=bool).reshape(X.shape))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int64))
        object.__setattr__(self, "user_ids", np.asarray(self.user_ids, dtype=object))
        object.__setattr__(self, "session_ids", np.asarray(self.session_ids, dtype=object))
        object.__setattr__(self, "window_index", np.asarray(self.window_index, dtype=np.int64))
        for name in ("user_ids", "session_ids", "window_index"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match the label vector")

    def __len__(self) -> int:
        return len(self.y)

    @classmethod
    def from_vectors(
        cls, vectors: Sequence[FeatureVector], schema: FeatureSchema, window_length: float = 5.0
    ) -> "WindowedDataset":
        F = schema.feature_count
        for v in vectors:
            if len(v.values) != F:
                raise SchemaMismatch(f"vector has {len(v.values)} columns, schema {F}")
        return cls(
            schema,
            np.array([v.values for v in vectors]).reshape(len(vectors), F),
            np.array([v.missing for v in vectors], dtype=bool).reshape(len(vectors), F),
            [int(v.label) for v in vectors],
            [v.user_id for v in vectors],
            [v.session_id for v in vectors],
            [v.window_index for v in vectors],
            window_length,
        )

    @property
    def vectors(self) -> list[FeatureVector]:
        return [
            FeatureVector(
                self.X[i].copy(),
                self.missing[i].copy(),
                ActivityClass(int(self.y[i])),
                self.user_ids[i],
                self.session_ids[i],
                int(self.window_index[i]),
            )
            for i in range(len(self))
        ]

    def subset(self, rows) -> "WindowedDataset":
        rows = np.asarray(rows)
        if rows.dtype != bool:
            rows = rows.astype(np.intp)
        return WindowedDataset(
            self.schema,
            self.X[rows],
            self.missing[rows],
            self.y[rows],
            self.user_ids[rows],
            self.session_ids[rows],
            self.window_index[rows],
            self.window_length,
        )

    def filter_classes(self, classes: Iterable[ActivityClass]) -> "WindowedDataset":
        keep = np.isin(self.y, [int(c) for c in classes])
        return self.subset(keep)

    @property
    def classes(self) -> list[ActivityClass]:
        return [ActivityClass(int(c)) for c in np.unique(self.y)]

    @property
    def users(self) -> list[str]:
        return list(dict.fromkeys(self.user_ids.tolist()))

    @property
    def sessions(self) -> list[str]:
        return list(dict.fromkeys(self.session_ids.tolist()))

    @property
    def class_durations(self) -> dict[ActivityClass, float]:
        counts = np.bincount(self.y, minlength=len(ActivityClass))
        return {c: float(counts[c]) * self.window_length for c in ActivityClass if counts[c]}

    @property
    def provenance(self) -> dict[tuple[str, ActivityClass, str], np.ndarray]:
        """(user, class, session) -> row indices."""
        index: dict[tuple, list[int]] = {}
        for i, (u, c, s) in enumerate(zip(self.user_ids, self.y, self.session_ids)):
            index.setdefault((u, ActivityClass(int(c)), s), []).append(i)
        return {k: np.asarray(v, dtype=np.intp) for k, v in index.items()}

    @property
    def window_ids(self) -> list[str]:
        return [f"{s}:{w}" for s, w in zip(self.session_ids, self.window_index)]


def build_dataset(
    sessions: Sequence[RecordingSession],
    schema: FeatureSchema | None = None,
    config: WindowingConfig = WindowingConfig(),
    jobs: int = 1,
) -> WindowedDataset:
    """Featurize every session into one dataset. Default schema: all non-excluded sensors."""
    schema = schema or FeatureSchema(FEATURE_SENSORS)

    def run(session):
        return featurize_session(session, schema, config)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(run, sessions))
    else:
        parts = [run(s) for s in sessions]
    vectors = [v for part in parts for v in part]
    return WindowedDataset.from_vectors(vectors, schema, config.window_length)


def select_sensor_set(dataset: WindowedDataset, sensor_set: SensorSet | Iterable[SensorKind]) -> WindowedDataset:
    members = sensor_set.members if isinstance(sensor_set, SensorSet) else set(sensor_set)
    schema, cols = dataset.schema.restrict(members)
    return WindowedDataset(
        schema,
        dataset.X[:, cols],
        dataset.missing[:, cols],
        dataset.y,
        dataset.user_ids,
        dataset.session_ids,
        dataset.window_index,
        dataset.window_length,
    )


def _apportion(total: int, weights: Sequence[int]) -> list[int]:
    """Largest-remainder split of ``total`` proportionally to ``weights``."""
    W = sum(weights)
    exact = [Fraction(total * w, W) for w in weights]
    quota = [math.floor(e) for e in exact]
    left = total - sum(quota)
    by_remainder = sorted(range(len(weights)), key=lambda i: (-(exact[i] - quota[i]), i))
    for i in by_remainder[:left]:
        quota[i] += 1
    return quota


def balance_classes(
    dataset: WindowedDataset,
    classes: Iterable[ActivityClass] | None = None,
    mode: str = "earliest",
    seed: int = 0,
) -> WindowedDataset:
    """Truncate every class to the duration of the shortest one.

    Each user keeps the same share of a class as before. ``mode="earliest"``
    keeps each user's first windows (sessions in dataset order, then window
    index); ``mode="random"`` draws them with ``seed``.
    """
    if mode not in ("earliest", "random"):
        raise ValueError(f"unknown balancing mode {mode!r}")
    classes = list(ActivityClass) if classes is None else [ActivityClass.parse(c) for c in classes]
    counts = {c: int(np.sum(dataset.y == c)) for c in classes}
    empty = [c.title for c, n in counts.items() if n == 0]
    if empty:
        raise EmptyClass(f"no windows for {', '.join(empty)}")
    target = min(counts.values())
    session_rank = {s: i for i, s in enumerate(dataset.sessions)}
    keep: list[int] = []
    for c in classes:
        rows = np.flatnonzero(dataset.y == c)
        users = list(dict.fromkeys(dataset.user_ids[rows].tolist()))
        per_user = [rows[dataset.user_ids[rows] == u] for u in users]
        quotas = _apportion(target, [len(r) for r in per_user])
        for u, r, q in zip(users, per_user, quotas):
            if mode == "earliest":
                order = sorted(r, key=lambda i: (session_rank[dataset.session_ids[i]], dataset.window_index[i]))
                keep.extend(order[:q])
            else:
                rng = np.random.default_rng([seed, int(c)] + [ord(ch) for ch in str(u)])
                keep.extend(rng.choice(r, size=q, replace=False).tolist())
    rest = np.flatnonzero(~np.isin(dataset.y, [int(c) for c in classes]))
    return dataset.subset(np.sort(np.concatenate([np.asarray(keep, dtype=np.intp), rest])))


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "grouped"  # or "window"
    test_fraction: float = 0.2
    seed: int = 0
    stratify: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("grouped", "window"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _pick_test(items: list, fraction: float, rng: np.random.Generator, what: str, clamp: bool) -> list:
    n = len(items)
    k = _round_half_up(fraction * n)
    if clamp:
        if n < 2:
            raise DegenerateSplit(f"{what}: only {n} unit(s), cannot place one on each side")
        k = min(max(k, 1), n - 1)
    perm = rng.permutation(n)
    return [items[i] for i in perm[:k]]


def split(dataset: WindowedDataset, spec: SplitSpec = SplitSpec()) -> tuple[WindowedDataset, WindowedDataset]:
    """Deterministic train/test partition.

    Stratified splits draw each class with its own generator seeded by
    ``(seed, class)``, so filtering a dataset to some classes and splitting
    again selects the same test sessions for those classes.
    """
    if len(dataset) == 0:
        raise ValueError("cannot split an empty dataset")
    test = np.zeros(len(dataset), dtype=bool)
    if spec.mode == "grouped":
        session_label = {}
        for s, c in zip(dataset.session_ids, dataset.y):
            session_label.setdefault(s, int(c))
        if spec.stratify:
            for c in sorted(set(session_label.values())):
                sess = [s for s, lab in session_label.items() if lab == c]
                rng = np.random.default_rng([spec.seed, c])
                chosen = _pick_test(sess, spec.test_fraction, rng, ActivityClass(c).title, clamp=True)
                test |= np.isin(dataset.session_ids, chosen)
        else:
            sess = list(session_label)
            chosen = _pick_test(sess, spec.test_fraction, np.random.default_rng([spec.seed]), "dataset", True)
            test |= np.isin(dataset.session_ids, chosen)
    else:
        if spec.stratify:
            for c in np.unique(dataset.y):
                rows = np.flatnonzero(dataset.y == c).tolist()
                rng = np.random.default_rng([spec.seed, int(c)])
                test[_pick_test(rows, spec.test_fraction, rng, "", clamp=False)] = True
        else:
            rows = list(range(len(dataset)))
            test[_pick_test(rows, spec.test_fraction, np.random.default_rng([spec.seed]), "", False)] = True
    return dataset.subset(~test), dataset.subset(test)


def leave_user_out(
    dataset: WindowedDataset, user: str, classes: Iterable[ActivityClass] | None = None
) -> tuple[WindowedDataset, WindowedDataset]:
    is_user = dataset.user_ids == user
    if not is_user.any():
        raise UnknownUser(f"user {user!r} not in dataset")
    train = dataset.subset(~is_user)
    if classes is not None:
        train = train.filter_classes(classes)
    return train, dataset.subset(is_user)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

META_COLUMNS = ("label", "user_id", "session_id", "window_index")


def schema_from_columns(columns: Sequence[str]) -> FeatureSchema:
    sensors: list[SensorKind] = []
    per_axis = False
    for col in columns:
        prefix, _, stat = col.rpartition("_")
        if stat not in STATISTICS:
            raise SchemaMismatch(f"unexpected feature column {col!r}")
        try:
            kind = SensorKind(prefix)
        except ValueError:
            base, _, axis = prefix.rpartition("_")
            if axis not in AXIS_NAMES:
                raise SchemaMismatch(f"unknown sensor in column {col!r}") from None
            try:
                kind = SensorKind(base)
            except ValueError:
                raise SchemaMismatch(f"unknown sensor in column {col!r}") from None
            per_axis = True
        if kind not in sensors:
            sensors.append(kind)
    schema = FeatureSchema(tuple(sensors), per_axis)
    if schema.columns != list(columns):
        raise SchemaMismatch("feature columns are not in canonical order")
    return schema


def save_csv(dataset: WindowedDataset, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(dataset, fh)


def write_csv(dataset: WindowedDataset, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(dataset.schema.columns + list(META_COLUMNS))
    for i in range(len(dataset)):
        cells = ["" if m else repr(float(v)) for v, m in zip(dataset.X[i], dataset.missing[i])]
        cells += [
            ActivityClass(int(dataset.y[i])).name.lower(),
            dataset.user_ids[i],
            dataset.session_ids[i],
            int(dataset.window_index[i]),
        ]
        w.writerow(cells)


def read_csv(fh, window_length: float = 5.0, labeled: bool = True) -> WindowedDataset:
    """Read a feature table. With ``labeled=False`` the metadata columns are optional."""
    reader = csv.reader(fh)
    header = next(reader)
    meta = [c for c in header if c in META_COLUMNS]
    feat_cols = [c for c in header if c not in META_COLUMNS]
    schema = schema_from_columns(feat_cols)
    pos = {c: header.index(c) for c in meta}
    fidx = [header.index(c) for c in feat_cols]
    X, y, users, sessions, widx = [], [], [], [], []
    for n, row in enumerate(reader):
        if not row:
            continue
        X.append([float(row[j]) if row[j].strip() else np.nan for j in fidx])
        if labeled or "label" in pos:
            y.append(int(ActivityClass.parse(row[pos["label"]])))
        else:
            y.append(0)
        users.append(row[pos["user_id"]] if "user_id" in pos else "")
        sessions.append(row[pos["session_id"]] if "session_id" in pos else "")
        widx.append(int(row[pos["window_index"]]) if "window_index" in pos else n)
    X = np.asarray(X, dtype=np.float64).reshape(len(y), schema.feature_count)
    return WindowedDataset(schema, X, np.isnan(X), y, users, sessions, widx, window_length)


def load_csv(path: str | os.PathLike, window_length: float = 5.0) -> WindowedDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        return read_csv(fh, window_length)


def save_npz(dataset: WindowedDataset, path: str | os.PathLike) -> None:
    """Binary cache. The schema and its hash travel with the arrays."""
    with open(path, "wb") as fh:
        np.savez_compressed(
            fh,
            X=dataset.X,
            missing=dataset.missing,
            y=dataset.y,
            user_ids=dataset.user_ids.astype(str),
            session_ids=dataset.session_ids.astype(str),
            window_index=dataset.window_index,
            window_length=np.float64(dataset.window_length),
            schema=np.str_(json.dumps(dataset.schema.to_dict())),
            schema_hash=np.str_(dataset.schema.hash),
        )


def load_npz(path: str | os.PathLike, expected_hash: str | None = None) -> WindowedDataset:
    with np.load(path, allow_pickle=False) as z:
        schema = FeatureSchema.from_dict(json.loads(str(z["schema"])))
        stored = str(z["schema_hash"])
        if stored != schema.hash:
            raise SchemaMismatch("feature cache is corrupt: schema hash does not match schema")
        if expected_hash is not None and stored != expected_hash:
            raise SchemaMismatch(f"feature cache schema {stored} != expected {expected_hash}")
        return WindowedDataset(
            schema,
            z["X"],
            z["missing"],
            z["y"],
            z["user_ids"].tolist(),
            z["session_ids"].tolist(),
            z["window_index"],
            float(z["window_length"]),
        )


def load_features(path: str | os.PathLike) -> WindowedDataset:
    """Load a feature table by extension: ``.npz`` binary cache or CSV."""
    if Path(path).suffix == ".npz":
        return load_npz(path)
    return load_csv(path)


def save_features(dataset: WindowedDataset, path: str | os.PathLike) -> None:
    if Path(path).suffix == ".npz":
        save_npz(dataset, path)
    else:
        save_csv(dataset, path)
