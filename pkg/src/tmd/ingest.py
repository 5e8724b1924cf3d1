"""Raw sensor-log ingestion and seeded synthetic sessions.

Canonical line format::

    timestamp_ms,sensor_name,accuracy,v1[,v2[,v3]]

A header line is optional. One file holds one labeled activity recorded by
one user. Timestamps are shifted so that the earliest record sits at 0 ms.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Mapping, TextIO, Union

import numpy as np

from .errors import EmptyFile, InvalidDuration, MalformedRecord

SAMPLE_RATE_HZ = 20
SAMPLE_PERIOD_MS = 1000 // SAMPLE_RATE_HZ


class ActivityClass(IntEnum):
    BUS = 0
    CAR = 1
    STILL = 2
    TRAIN = 3
    WALKING = 4

    @classmethod
    def parse(cls, text: "str | int | ActivityClass") -> "ActivityClass":
        if isinstance(text, (int, np.integer)):
            return cls(int(text))
        try:
            return cls[str(text).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown activity class {text!r}") from None

    @property
    def title(self) -> str:
        return self.name.capitalize()


class SensorKind(Enum):
    ACCELEROMETER = "accelerometer"
    GYROSCOPE = "gyroscope"
    SOUND = "sound"
    LINEAR_ACCELERATION = "linear_acceleration"
    SPEED = "speed"
    ROTATION_VECTOR = "rotation_vector"
    LIGHT = "light"
    PRESSURE = "pressure"
    MAGNETIC_FIELD = "magnetic_field"
    GRAVITY = "gravity"
    PROXIMITY = "proximity"

    @property
    def axes(self) -> int:
        return _AXES[self]

    @property
    def excluded(self) -> bool:
        return self in EXCLUDED_SENSORS

    @property
    def featurizable(self) -> bool:
        return not self.excluded

    @property
    def order(self) -> int:
        return _ORDER[self]

    def __lt__(self, other: "SensorKind") -> bool:
        return self.order < other.order


_AXES = {
    SensorKind.ACCELEROMETER: 3,
    SensorKind.GYROSCOPE: 3,
    SensorKind.SOUND: 1,
    SensorKind.LINEAR_ACCELERATION: 3,
    SensorKind.SPEED: 1,
    SensorKind.ROTATION_VECTOR: 3,
    SensorKind.LIGHT: 1,
    SensorKind.PRESSURE: 1,
    SensorKind.MAGNETIC_FIELD: 3,
    SensorKind.GRAVITY: 3,
    SensorKind.PROXIMITY: 1,
}
_ORDER = {kind: i for i, kind in enumerate(SensorKind)}

EXCLUDED_SENSORS = frozenset(
    {
        SensorKind.LIGHT,
        SensorKind.PRESSURE,
        SensorKind.MAGNETIC_FIELD,
        SensorKind.GRAVITY,
        SensorKind.PROXIMITY,
    }
)
FEATURE_SENSORS = tuple(k for k in SensorKind if not k.excluded)


@dataclass(frozen=True)
class UnknownKind:
    """A sensor name the pipeline does not recognize. Kept, never featurized."""

    name: str

    @property
    def value(self) -> str:
        return self.name

    axes = None
    excluded = False
    featurizable = False


Sensor = Union[SensorKind, UnknownKind]

_ALIASES = {
    "acc": SensorKind.ACCELEROMETER,
    "accel": SensorKind.ACCELEROMETER,
    "gyro": SensorKind.GYROSCOPE,
    "microphone": SensorKind.SOUND,
    "linear_accelerometer": SensorKind.LINEAR_ACCELERATION,
    "linearacceleration": SensorKind.LINEAR_ACCELERATION,
    "rotationvector": SensorKind.ROTATION_VECTOR,
    "game_rotation_vector": SensorKind.ROTATION_VECTOR,
    "pression": SensorKind.PRESSURE,
    "barometer": SensorKind.PRESSURE,
    "magnetometer": SensorKind.MAGNETIC_FIELD,
    "magneticfield": SensorKind.MAGNETIC_FIELD,
    "magnetic_field_uncalibrated": SensorKind.MAGNETIC_FIELD,
    "gps_speed": SensorKind.SPEED,
}


def parse_sensor(name: str) -> Sensor:
    """Map a sensor name from a log line to a kind, case- and separator-insensitive.

    Android-style names such as ``android.sensor.linear_acceleration`` are
    accepted; anything unrecognized comes back as :class:`UnknownKind`.
    """
    key = name.strip().lower()
    if key.startswith("android.sensor."):
        key = key[len("android.sensor.") :]
    key = key.replace(" ", "_").replace("-", "_")
    try:
        return SensorKind(key)
    except ValueError:
        pass
    if key in _ALIASES:
        return _ALIASES[key]
    return UnknownKind(name.strip())


def sensor_order(sensor: Sensor) -> tuple:
    if isinstance(sensor, SensorKind):
        return (0, sensor.order, "")
    return (1, 0, sensor.name)


@dataclass(frozen=True)
class SensorReading:
    timestamp: int
    sensor: Sensor
    values: tuple[float, ...]
    accuracy: int = 3

    def __post_init__(self) -> None:
        axes = self.sensor.axes
        if axes is not None and len(self.values) != axes:
            raise ValueError(
                f"{self.sensor.value} expects {axes} values, got {len(self.values)}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("sensor values must be finite")


@dataclass(frozen=True, eq=False)
class SensorStream:
    """All readings of one sensor in a session, column-wise and time-sorted."""

    timestamps: np.ndarray  # int64, shape (n,)
    values: np.ndarray  # float64, shape (n, axes)
    accuracy: np.ndarray  # int64, shape (n,)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SensorStream):
            return NotImplemented
        return (
            np.array_equal(self.timestamps, other.timestamps)
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.accuracy, other.accuracy)
        )

    @property
    def magnitude(self) -> np.ndarray:
        if self.values.shape[1] == 1:
            return self.values[:, 0]
        return np.sqrt(np.einsum("ij,ij->i", self.values, self.values))


@dataclass(frozen=True, eq=False)
class RecordingSession:
    """One labeled recording of one user. Immutable after construction.

    Readings are stored per sensor; :attr:`readings` rebuilds the merged,
    time-ordered list on demand.
    """

    session_id: str
    user_id: str
    label: ActivityClass
    streams: Mapping[Sensor, SensorStream]
    skipped_lines: int = 0

    def __post_init__(self) -> None:
        if not self.streams or all(len(s) == 0 for s in self.streams.values()):
            raise ValueError("a session needs at least one reading")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecordingSession):
            return NotImplemented
        return (
            self.session_id == other.session_id
            and self.user_id == other.user_id
            and self.label == other.label
            and dict(self.streams) == dict(other.streams)
        )

    @property
    def start(self) -> int:
        return min(int(s.timestamps[0]) for s in self.streams.values() if len(s))

    @property
    def end(self) -> int:
        return max(int(s.timestamps[-1]) for s in self.streams.values() if len(s))

    @property
    def duration(self) -> int:
        """Milliseconds between the first and the last reading."""
        return self.end - self.start

    @property
    def sensors(self) -> list[Sensor]:
        return sorted(self.streams, key=sensor_order)

    def __len__(self) -> int:
        return sum(len(s) for s in self.streams.values())

    @property
    def readings(self) -> list[SensorReading]:
        rows = []
        for sensor, stream in self.streams.items():
            for t, v, a in zip(stream.timestamps, stream.values, stream.accuracy):
                rows.append(SensorReading(int(t), sensor, tuple(float(x) for x in v), int(a)))
        # stable: equal timestamps keep sensor insertion order
        rows.sort(key=lambda r: r.timestamp)
        return rows

    @classmethod
    def from_readings(
        cls,
        session_id: str,
        user_id: str,
        label: ActivityClass,
        readings: Iterable[SensorReading],
        normalize: bool = True,
        skipped_lines: int = 0,
    ) -> "RecordingSession":
        buckets: dict[Sensor, tuple[list, list, list]] = {}
        for r in readings:
            ts, vals, acc = buckets.setdefault(r.sensor, ([], [], []))
            ts.append(r.timestamp)
            vals.append(r.values)
            acc.append(r.accuracy)
        return _build_session(session_id, user_id, label, buckets, normalize, skipped_lines)


def _build_session(session_id, user_id, label, buckets, normalize, skipped_lines):
    if not buckets:
        raise ValueError("a session needs at least one reading")
    offset = min(min(ts) for ts, _, _ in buckets.values()) if normalize else 0
    streams = {}
    for sensor, (ts, vals, acc) in buckets.items():
        t = np.asarray(ts, dtype=np.int64) - offset
        order = np.argsort(t, kind="stable")
        width = len(vals[0])
        v = np.asarray(vals, dtype=np.float64).reshape(len(vals), width)
        streams[sensor] = SensorStream(
            timestamps=t[order],
            values=v[order],
            accuracy=np.asarray(acc, dtype=np.int64)[order],
        )
    return RecordingSession(session_id, str(user_id), ActivityClass.parse(label), streams, skipped_lines)


def _parse_line(fields: list[str], arity: dict) -> tuple[int, Sensor, tuple, int]:
    if len(fields) < 4:
        raise ValueError(f"expected at least 4 fields, got {len(fields)}")
    try:
        ts = int(fields[0])
    except ValueError:
        raise ValueError(f"timestamp {fields[0]!r} is not an integer") from None
    sensor = parse_sensor(fields[1])
    try:
        acc = int(fields[2])
    except ValueError:
        raise ValueError(f"accuracy {fields[2]!r} is not an integer") from None
    try:
        values = tuple(float(x) for x in fields[3:])
    except ValueError as exc:
        raise ValueError(f"bad sensor value ({exc})") from None
    expected = sensor.axes if sensor.axes is not None else arity.get(sensor)
    if expected is not None and len(values) != expected:
        raise ValueError(f"{sensor.value} expects {expected} values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise ValueError("non-finite sensor value")
    if sensor.axes is None:
        arity.setdefault(sensor, len(values))
    return ts, sensor, values, acc


def read_log(
    stream: TextIO,
    label: ActivityClass | str,
    user_id: str,
    session_id: str = "session",
    strict: bool = True,
) -> RecordingSession:
    """Parse canonical records from an open text stream. See :func:`parse_log`."""
    buckets: dict[Sensor, tuple[list, list, list]] = {}
    arity: dict[Sensor, int] = {}
    skipped = 0
    seen_content = False
    for lineno, fields in enumerate(csv.reader(stream), start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if not seen_content:
            seen_content = True
            if not fields[0].strip().lstrip("-").isdigit():
                continue  # header
        try:
            ts, sensor, values, acc = _parse_line([f.strip() for f in fields], arity)
        except ValueError as exc:
            if strict:
                raise MalformedRecord(lineno, str(exc)) from None
            skipped += 1
            continue
        t_list, v_list, a_list = buckets.setdefault(sensor, ([], [], []))
        t_list.append(ts)
        v_list.append(values)
        a_list.append(acc)
    if not buckets:
        raise EmptyFile(f"no well-formed records in {session_id}")
    return _build_session(session_id, user_id, label, buckets, True, skipped)


def parse_log(
    path: str | os.PathLike,
    label: ActivityClass | str,
    user_id: str,
    strict: bool = True,
    session_id: str | None = None,
) -> RecordingSession:
    """Read one canonical CSV log into a session.

    Strict mode raises :class:`MalformedRecord` on the first bad line. With
    ``strict=False`` bad lines are dropped and counted in
    ``session.skipped_lines``.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return read_log(fh, label, user_id, session_id or path.stem, strict)


def format_value(v: float) -> str:
    return repr(float(v))


def write_log(session: RecordingSession, dest: str | os.PathLike | TextIO, header: bool = True) -> None:
    """Write a session in canonical format. ``parse_log`` reads it back unchanged."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_log(session, fh, header)
        return
    if header:
        dest.write("timestamp_ms,sensor_name,accuracy,values\n")
    lines = []
    keys = []
    for sensor, stream in session.streams.items():
        name = sensor.value
        for t, v, a in zip(stream.timestamps.tolist(), stream.values.tolist(), stream.accuracy.tolist()):
            lines.append(f"{t},{name},{a}," + ",".join(map(repr, v)))
            keys.append(t)
    for i in sorted(range(len(lines)), key=keys.__getitem__):
        dest.write(lines[i])
        dest.write("\n")


def session_to_csv(session: RecordingSession, header: bool = True) -> str:
    buf = io.StringIO()
    write_log(session, buf, header)
    return buf.getvalue()


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    user_id: str
    label: ActivityClass


def read_manifest(path: str | os.PathLike) -> list[ManifestEntry]:
    """Read a ``path,user_id,label`` manifest. Relative paths resolve against its folder."""
    path = Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            p = Path(row["path"].strip())
            if not p.is_absolute():
                p = path.parent / p
            entries.append(ManifestEntry(p, row["user_id"].strip(), ActivityClass.parse(row["label"])))
    return entries


def ingest_manifest(
    path: str | os.PathLike, strict: bool = True, jobs: int = 1
) -> list[RecordingSession]:
    entries = read_manifest(path)
    root = Path(path).parent

    def load(entry: ManifestEntry) -> RecordingSession:
        try:
            sid = entry.path.relative_to(root).with_suffix("").as_posix()
        except ValueError:
            sid = entry.path.with_suffix("").as_posix()
        return parse_log(entry.path, entry.label, entry.user_id, strict, session_id=sid)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(load, entries))
    return [load(e) for e in entries]


# ---------------------------------------------------------------------------
# synthetic sessions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SensorProfile:
    """Generative model for one sensor's magnitude under one activity.

    magnitude(t) = level' + amplitude * sin(2 pi frequency t + phase) + noise' * N(0, 1)

    ``level' = level + spread * N(0, 1)`` and
    ``noise' = noise * max(0.1, 1 + noise_spread * N(0, 1))`` are drawn once
    per session, so sessions of one class differ from each other.
    Multi-axis sensors point the magnitude along a per-session random unit
    vector. Single-axis channels are clipped at 0.
    """

    level: float
    amplitude: float = 0.0
    frequency: float = 0.0
    noise: float = 0.0
    spread: float = 0.0
    noise_spread: float = 0.0

    @property
    def band(self) -> tuple[float, float]:
        """Where a window mean of the channel lands for any phase, up to 3 sigma of session spread."""
        half = self.amplitude + 3 * self.spread + self.noise
        return self.level - half, self.level + half


_B, _C, _S, _T, _W = (
    ActivityClass.BUS,
    ActivityClass.CAR,
    ActivityClass.STILL,
    ActivityClass.TRAIN,
    ActivityClass.WALKING,
)

# Units: m/s^2 (accelerations), rad/s (gyroscope), dB (sound), m/s (speed).
# Motorized classes overlap on every channel except speed.
PROFILES: dict[ActivityClass, dict[SensorKind, SensorProfile]] = {
    _B: {
        SensorKind.ACCELEROMETER: SensorProfile(9.81, 0.25, 0.6, 0.70, 0.10, 0.25),
        SensorKind.GYROSCOPE: SensorProfile(0.25, 0.08, 0.6, 0.12, 0.05, 0.25),
        SensorKind.SOUND: SensorProfile(64.0, 0.0, 0.0, 6.0, 4.0, 0.2),
        SensorKind.LINEAR_ACCELERATION: SensorProfile(0.70, 0.20, 0.6, 0.40, 0.15, 0.25),
        SensorKind.SPEED: SensorProfile(7.0, 2.0, 0.02, 0.8, 0.5, 0.2),
        SensorKind.ROTATION_VECTOR: SensorProfile(0.70, 0.0, 0.0, 0.025, 0.05, 0.3),
    },
    _C: {
        SensorKind.ACCELEROMETER: SensorProfile(9.81, 0.20, 0.7, 0.60, 0.10, 0.25),
        SensorKind.GYROSCOPE: SensorProfile(0.22, 0.06, 0.7, 0.11, 0.05, 0.25),
        SensorKind.SOUND: SensorProfile(61.0, 0.0, 0.0, 5.0, 4.0, 0.2),
        SensorKind.LINEAR_ACCELERATION: SensorProfile(0.60, 0.10, 0.7, 0.35, 0.15, 0.25),
        SensorKind.SPEED: SensorProfile(13.9, 3.0, 0.02, 1.0, 1.0, 0.2),
        SensorKind.ROTATION_VECTOR: SensorProfile(0.70, 0.0, 0.0, 0.020, 0.05, 0.3),
    },
    _S: {
        SensorKind.ACCELEROMETER: SensorProfile(9.81, 0.0, 0.0, 0.05, 0.02, 0.2),
        SensorKind.GYROSCOPE: SensorProfile(0.02, 0.0, 0.0, 0.01, 0.005, 0.2),
        SensorKind.SOUND: SensorProfile(40.0, 0.0, 0.0, 3.0, 3.0, 0.2),
        SensorKind.LINEAR_ACCELERATION: SensorProfile(0.05, 0.0, 0.0, 0.02, 0.01, 0.2),
        SensorKind.SPEED: SensorProfile(0.0, 0.0, 0.0, 0.1, 0.0, 0.2),
        SensorKind.ROTATION_VECTOR: SensorProfile(0.70, 0.0, 0.0, 0.002, 0.05, 0.2),
    },
    _T: {
        SensorKind.ACCELEROMETER: SensorProfile(9.81, 0.15, 0.4, 0.50, 0.10, 0.25),
        SensorKind.GYROSCOPE: SensorProfile(0.20, 0.05, 0.4, 0.10, 0.05, 0.25),
        SensorKind.SOUND: SensorProfile(66.0, 0.0, 0.0, 6.0, 4.0, 0.2),
        SensorKind.LINEAR_ACCELERATION: SensorProfile(0.50, 0.05, 0.4, 0.30, 0.15, 0.25),
        SensorKind.SPEED: SensorProfile(25.0, 3.0, 0.01, 1.0, 2.0, 0.2),
        SensorKind.ROTATION_VECTOR: SensorProfile(0.70, 0.0, 0.0, 0.018, 0.05, 0.3),
    },
    _W: {
        SensorKind.ACCELEROMETER: SensorProfile(9.81, 3.0, 2.0, 1.0, 0.10, 0.2),
        SensorKind.GYROSCOPE: SensorProfile(1.20, 0.60, 2.0, 0.30, 0.15, 0.2),
        SensorKind.SOUND: SensorProfile(52.0, 0.0, 0.0, 6.0, 4.0, 0.2),
        SensorKind.LINEAR_ACCELERATION: SensorProfile(2.80, 1.50, 2.0, 0.80, 0.30, 0.2),
        SensorKind.SPEED: SensorProfile(1.4, 0.2, 0.05, 0.15, 0.1, 0.2),
        SensorKind.ROTATION_VECTOR: SensorProfile(0.70, 0.0, 0.0, 0.10, 0.05, 0.2),
    },
}

# environment-dependent sensors: identical for every activity
AMBIENT_PROFILES = {
    SensorKind.LIGHT: SensorProfile(300.0, 0.0, 0.0, 20.0),
    SensorKind.PRESSURE: SensorProfile(1013.0, 0.0, 0.0, 0.5),
    SensorKind.MAGNETIC_FIELD: SensorProfile(45.0, 0.0, 0.0, 2.0),
    SensorKind.GRAVITY: SensorProfile(9.81, 0.0, 0.0, 0.01),
    SensorKind.PROXIMITY: SensorProfile(5.0, 0.0, 0.0, 0.0),
}


def synthesize_session(
    activity: ActivityClass | str,
    duration: float,
    sensors: Iterable[SensorKind],
    seed: int,
    user_id: str = "synthetic",
    session_id: str | None = None,
    profiles: Mapping[ActivityClass, Mapping[SensorKind, SensorProfile]] | None = None,
) -> RecordingSession:
    """Generate a deterministic 20 Hz session for ``activity``.

    ``duration`` is in seconds. Each sensor gets ``floor(duration * 20)``
    readings at 50 ms spacing. ``profiles`` overrides :data:`PROFILES`
    per (class, sensor); missing entries fall back to the defaults.
    """
    activity = ActivityClass.parse(activity)
    if not duration > 0 or not math.isfinite(duration):
        raise InvalidDuration(f"duration must be positive, got {duration}")
    n = int(math.floor(duration * SAMPLE_RATE_HZ + 1e-9))
    if n < 1:
        raise InvalidDuration(f"duration {duration}s yields no 20 Hz sample")
    kinds = sorted(set(sensors))
    if not kinds:
        raise ValueError("sensors must be non-empty")

    rng = np.random.default_rng(seed)
    t_ms = np.arange(n, dtype=np.int64) * SAMPLE_PERIOD_MS
    t_s = t_ms / 1000.0
    streams = {}
    for kind in kinds:
        prof = _profile_for(activity, kind, profiles)
        phase = rng.uniform(0.0, 2 * np.pi)
        level = prof.level + prof.spread * rng.standard_normal()
        noise = prof.noise * max(0.1, 1.0 + prof.noise_spread * rng.standard_normal())
        mag = (
            level
            + prof.amplitude * np.sin(2 * np.pi * prof.frequency * t_s + phase)
            + noise * rng.standard_normal(n)
        )
        if kind.axes == 1:
            values = np.maximum(mag, 0.0)[:, None]
        else:
            direction = rng.standard_normal(kind.axes)
            direction /= np.linalg.norm(direction)
            values = mag[:, None] * direction[None, :]
        streams[kind] = SensorStream(t_ms.copy(), values, np.full(n, 3, dtype=np.int64))
    sid = session_id or f"synth-{activity.name.lower()}-{seed}"
    return RecordingSession(sid, str(user_id), activity, streams)


def _profile_for(activity, kind, profiles) -> SensorProfile:
    if profiles is not None and kind in profiles.get(activity, {}):
        return profiles[activity][kind]
    if kind in AMBIENT_PROFILES:
        return AMBIENT_PROFILES[kind]
    return PROFILES[activity][kind]


def synthesize_corpus(
    seed: int,
    minutes_per_class: float = 10.0,
    sessions_per_class: int = 5,
    users: int = 5,
    sensors: Iterable[SensorKind] = FEATURE_SENSORS,
    classes: Iterable[ActivityClass] = tuple(ActivityClass),
    profiles: Mapping[ActivityClass, Mapping[SensorKind, SensorProfile]] | None = None,
) -> list[RecordingSession]:
    """Several synthetic sessions per class, spread round-robin over ``users``.

    Session i of class c goes to user ``U{(i + c) % users + 1}`` and gets a
    seed derived from ``(seed, c, i)``.
    """
    if sessions_per_class < 1 or users < 1:
        raise ValueError("sessions_per_class and users must be >= 1")
    sensors = tuple(sensors)
    seconds = minutes_per_class * 60.0 / sessions_per_class
    out = []
    for c in classes:
        c = ActivityClass.parse(c)
        for i in range(sessions_per_class):
            sub_seed = int(np.random.SeedSequence([seed, int(c), i]).generate_state(1)[0])
            user = f"U{(i + int(c)) % users + 1}"
            sid = f"{c.name.lower()}-{i:03d}"
            out.append(synthesize_session(c, seconds, sensors, sub_seed, user, sid, profiles))
    return out
