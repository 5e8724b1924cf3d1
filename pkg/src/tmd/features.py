"""Fixed-length windowing, per-sensor statistics and training-mean imputation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaMismatch, UnknownSensor
from .ingest import ActivityClass, RecordingSession, SensorKind

STATISTICS = ("min", "max", "mean", "std")
AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class WindowingConfig:
    window_length: float = 5.0  # seconds
    overlap_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not self.window_length > 0:
            raise ValueError("window_length must be > 0")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError("overlap_fraction must be in [0, 1)")

    @property
    def length_ms(self) -> Fraction:
        # decimal reading of the configured value: 0.1 means 1/10, not its binary approximation
        return Fraction(str(self.window_length)) * 1000

    @property
    def stride_ms(self) -> Fraction:
        return self.length_ms * (1 - Fraction(str(self.overlap_fraction)))


def window_count(duration_ms: int, config: WindowingConfig) -> int:
    W = config.length_ms
    if duration_ms < W:
        return 0
    return math.floor((duration_ms - W) / config.stride_ms) + 1


@dataclass(frozen=True)
class FeatureSchema:
    """Column layout: sensors-major, statistics-minor.

    Sensors are kept in canonical :class:`SensorKind` order so a given sensor
    set always yields the same layout. With ``per_axis`` each axis of a
    multi-axis sensor gets its own four columns instead of the magnitude.
    """

    sensors: tuple[SensorKind, ...]
    per_axis: bool = False

    def __post_init__(self) -> None:
        sensors = tuple(sorted(set(self.sensors)))
        if len(sensors) != len(self.sensors):
            raise ValueError("duplicate sensors in schema")
        for s in sensors:
            if not isinstance(s, SensorKind) or s.excluded:
                raise ValueError(f"{s!r} cannot be featurized")
        object.__setattr__(self, "sensors", sensors)

    @property
    def channels(self) -> list[tuple[SensorKind, int | None]]:
        out = []
        for s in self.sensors:
            if self.per_axis and s.axes > 1:
                out.extend((s, a) for a in range(s.axes))
            else:
                out.append((s, None))
        return out

    @property
    def feature_count(self) -> int:
        return len(STATISTICS) * len(self.channels)

    @property
    def columns(self) -> list[str]:
        names = []
        for s, axis in self.channels:
            prefix = s.value if axis is None else f"{s.value}_{AXIS_NAMES[axis]}"
            names.extend(f"{prefix}_{stat}" for stat in STATISTICS)
        return names

    def index(self, sensor: SensorKind, statistic: str, axis: int | None = None) -> int:
        try:
            ch = self.channels.index((sensor, axis))
        except ValueError:
            raise UnknownSensor(f"{sensor} (axis {axis}) not in schema") from None
        return ch * len(STATISTICS) + STATISTICS.index(statistic)

    def sensor_columns(self, sensor: SensorKind) -> list[int]:
        if sensor not in self.sensors:
            raise UnknownSensor(f"{sensor.value} not in schema")
        k = len(STATISTICS)
        return [
            ch * k + j
            for ch, (s, _) in enumerate(self.channels)
            if s == sensor
            for j in range(k)
        ]

    def restrict(self, sensors: Iterable[SensorKind]) -> tuple["FeatureSchema", np.ndarray]:
        """Sub-schema over ``sensors`` and the column indices it keeps."""
        sensors = set(sensors)
        for s in sensors:
            if s not in self.sensors:
                raise UnknownSensor(f"{getattr(s, 'value', s)} not in schema")
        sub = FeatureSchema(tuple(sensors), self.per_axis)
        cols = [i for s in sub.sensors for i in self.sensor_columns(s)]
        return sub, np.asarray(cols, dtype=np.intp)

    def to_dict(self) -> dict:
        return {
            "sensors": [s.value for s in self.sensors],
            "per_axis": self.per_axis,
            "statistics": list(STATISTICS),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(tuple(SensorKind(s) for s in d["sensors"]), bool(d.get("per_axis", False)))

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class RawWindow:
    session_id: str
    user_id: str
    label: ActivityClass
    index: int
    start: Fraction  # ms, inclusive
    end: Fraction  # ms, exclusive
    data: dict[SensorKind, np.ndarray]  # (n, axes) per featurizable sensor


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    missing: np.ndarray
    label: ActivityClass
    user_id: str = ""
    session_id: str = ""
    window_index: int = 0

    def __len__(self) -> int:
        return len(self.values)


def partition_windows(session: RecordingSession, config: WindowingConfig = WindowingConfig()) -> list[RawWindow]:
    """Cut a session into windows ``[k*stride, k*stride + W)``.

    A trailing window that would run past the last reading is dropped, so a
    session shorter than W yields nothing.
    """
    n = window_count(session.duration, config)
    if n == 0:
        return []
    origin = session.start
    W, stride = config.length_ms, config.stride_ms
    starts = [origin + k * stride for k in range(n)]
    # first integer timestamp >= a fractional bound
    lo_int = np.array([math.ceil(s) for s in starts], dtype=np.int64)
    hi_int = np.array([math.ceil(s + W) for s in starts], dtype=np.int64)
    cuts = {}
    for sensor, stream in session.streams.items():
        if not getattr(sensor, "featurizable", False):
            continue
        cuts[sensor] = (
            stream.values,
            np.searchsorted(stream.timestamps, lo_int, side="left"),
            np.searchsorted(stream.timestamps, hi_int, side="left"),
        )
    windows = []
    for k in range(n):
        data = {s: vals[lo[k] : hi[k]] for s, (vals, lo, hi) in cuts.items()}
        windows.append(
            RawWindow(session.session_id, session.user_id, session.label, k, starts[k], starts[k] + W, data)
        )
    return windows


def _stats(x: np.ndarray) -> tuple[float, float, float, float]:
    mean = x.mean()
    return x.min(), x.max(), mean, math.sqrt(np.mean((x - mean) ** 2))


def window_stats(window: RawWindow, schema: FeatureSchema) -> FeatureVector:
    """min, max, mean and population std for every schema channel.

    Multi-axis readings are reduced to their Euclidean norm unless the schema
    is per-axis. A sensor with no readings leaves its columns NaN and flagged
    missing.
    """
    k = len(STATISTICS)
    values = np.full(schema.feature_count, np.nan)
    missing = np.ones(schema.feature_count, dtype=bool)
    for ch, (sensor, axis) in enumerate(schema.channels):
        raw = window.data.get(sensor)
        if raw is None or len(raw) == 0:
            continue
        if axis is not None:
            x = raw[:, axis]
        elif raw.shape[1] == 1:
            x = raw[:, 0]
        else:
            x = np.sqrt(np.einsum("ij,ij->i", raw, raw))
        values[ch * k : ch * k + k] = _stats(x)
        missing[ch * k : ch * k + k] = False
    return FeatureVector(values, missing, window.label, window.user_id, window.session_id, window.index)


def featurize_session(
    session: RecordingSession, schema: FeatureSchema, config: WindowingConfig = WindowingConfig()
) -> list[FeatureVector]:
    return [window_stats(w, schema) for w in partition_windows(session, config)]


@dataclass(frozen=True, eq=False)
class Imputer:
    """Per-column means over the observed training entries.

    Columns never observed in training hold 0.0 and are flagged in
    ``unobserved``.
    """

    means: np.ndarray
    unobserved: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        means = np.asarray(self.means, dtype=np.float64)
        object.__setattr__(self, "means", means)
        if self.unobserved is None:
            object.__setattr__(self, "unobserved", np.zeros(len(means), dtype=bool))

    def __len__(self) -> int:
        return len(self.means)

    @classmethod
    def fit(cls, X: np.ndarray, missing: np.ndarray | None = None) -> "Imputer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("need a non-empty 2-D training matrix")
        if missing is None:
            missing = np.isnan(X)
        observed = ~missing
        counts = observed.sum(axis=0)
        sums = np.where(observed, X, 0.0).sum(axis=0)
        unobserved = counts == 0
        means = np.where(unobserved, 0.0, sums / np.maximum(counts, 1))
        return cls(means, unobserved)

    def transform(self, X: np.ndarray, missing: np.ndarray | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != len(self.means):
            raise SchemaMismatch(f"expected {len(self.means)} columns, got {X.shape[-1]}")
        if missing is None:
            missing = np.isnan(X)
        return np.where(missing, self.means, X)


def fit_imputer(train_vectors: Sequence[FeatureVector]) -> Imputer:
    if len(train_vectors) == 0:
        raise ValueError("training set is empty")
    X = np.vstack([v.values for v in train_vectors])
    M = np.vstack([v.missing for v in train_vectors])
    return Imputer.fit(X, M)


def apply_imputer(vector: FeatureVector, imputer: Imputer) -> FeatureVector:
    if len(vector.values) != len(imputer):
        raise SchemaMismatch(f"vector has {len(vector.values)} columns, imputer {len(imputer)}")
    if not vector.missing.any():
        return vector
    return FeatureVector(
        imputer.transform(vector.values, vector.missing),
        np.zeros_like(vector.missing),
        vector.label,
        vector.user_id,
        vector.session_id,
        vector.window_index,
    )
