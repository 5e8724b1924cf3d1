import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmd.errors import EmptyFile, InvalidDuration, MalformedRecord
from tmd.ingest import (
    FEATURE_SENSORS,
    PROFILES,
    ActivityClass,
    RecordingSession,
    SensorKind,
    SensorReading,
    UnknownKind,
    ingest_manifest,
    parse_log,
    parse_sensor,
    read_log,
    session_to_csv,
    synthesize_corpus,
    synthesize_session,
    write_log,
)


def _write(tmp_path, text, name="log.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_activity_class_codes_are_alphabetical():
    assert [c.name for c in ActivityClass] == ["BUS", "CAR", "STILL", "TRAIN", "WALKING"]
    assert [int(c) for c in ActivityClass] == [0, 1, 2, 3, 4]
    assert ActivityClass.parse("walking") is ActivityClass.WALKING
    with pytest.raises(ValueError):
        ActivityClass.parse("bike")


@pytest.mark.parametrize(
    "name, kind",
    [
        ("accelerometer", SensorKind.ACCELEROMETER),
        ("android.sensor.linear_acceleration", SensorKind.LINEAR_ACCELERATION),
        ("Rotation Vector", SensorKind.ROTATION_VECTOR),
        ("pression", SensorKind.PRESSURE),
        ("magnetic field", SensorKind.MAGNETIC_FIELD),
    ],
)
def test_parse_sensor_names(name, kind):
    assert parse_sensor(name) is kind


def test_unknown_sensor_is_kept(tmp_path):
    p = _write(tmp_path, "0,sonar,3,1.0,2.0\n50,accelerometer,3,0,0,9.8\n100,sonar,3,1.5,2.5\n")
    s = parse_log(p, "car", "U1")
    assert UnknownKind("sonar") in s.streams
    assert len(s.streams[UnknownKind("sonar")]) == 2


def test_unknown_sensor_arity_fixed_by_first_record(tmp_path):
    p = _write(tmp_path, "0,sonar,3,1.0,2.0\n50,sonar,3,1.0\n")
    with pytest.raises(MalformedRecord):
        parse_log(p, "car", "U1")


def test_three_accelerometer_lines(tmp_path):
    p = _write(tmp_path, "0,accelerometer,3,0,0,9.8\n50,accelerometer,3,0,0,9.7\n100,accelerometer,3,0,0,9.9\n")
    s = parse_log(p, ActivityClass.CAR, "U1")
    assert s.duration == 100
    assert len(s.readings) == 3
    assert s.label is ActivityClass.CAR
    assert s.session_id == "log"


def test_out_of_order_lines_are_sorted(tmp_path):
    p = _write(tmp_path, "100,sound,3,2.0\n0,sound,3,1.0\n")
    s = parse_log(p, "still", "U2")
    assert [r.timestamp for r in s.readings] == [0, 100]
    assert [r.values for r in s.readings] == [(1.0,), (2.0,)]


def test_timestamps_are_session_relative(tmp_path):
    p = _write(tmp_path, "timestamp,sensor,accuracy,v\n1500000000100,sound,3,2.0\n1500000000000,speed,1,0.5\n")
    s = parse_log(p, "bus", "U3")
    assert s.start == 0 and s.duration == 100


def test_malformed_arity_strict_and_lenient(tmp_path):
    text = "0,accelerometer,3,0,0,9.8\n50,accelerometer,3,1.0,2.0\n100,accelerometer,3,0,0,9.8\n"
    p = _write(tmp_path, text)
    with pytest.raises(MalformedRecord) as err:
        parse_log(p, "walking", "U1")
    assert err.value.line == 2
    s = parse_log(p, "walking", "U1", strict=False)
    assert s.skipped_lines == 1
    assert len(s) == 2


@pytest.mark.parametrize(
    "line",
    ["abc,sound,3,1.0", "0,sound,x,1.0", "0,sound,3,nan", "0,sound,3", "0,sound,3,1.0,2.0", "0,speed,3,oops"],
)
def test_malformed_records(tmp_path, line):
    p = _write(tmp_path, "0,sound,3,1.0\n" + line + "\n")
    with pytest.raises(MalformedRecord):
        parse_log(p, "still", "U1")


def test_empty_file(tmp_path):
    with pytest.raises(EmptyFile):
        parse_log(_write(tmp_path, ""), "still", "U1")
    with pytest.raises(EmptyFile):
        parse_log(_write(tmp_path, "timestamp,sensor,accuracy,v\n\n", "h.csv"), "still", "U1")
    with pytest.raises(EmptyFile):
        parse_log(_write(tmp_path, "0,sound\n", "bad.csv"), "still", "U1", strict=False)


def test_duplicate_timestamps_allowed(tmp_path):
    p = _write(tmp_path, "0,sound,3,1.0\n0,sound,3,2.0\n0,speed,3,3.0\n")
    s = parse_log(p, "still", "U1")
    assert len(s) == 3 and s.duration == 0


def test_reading_invariants():
    with pytest.raises(ValueError):
        SensorReading(0, SensorKind.GYROSCOPE, (1.0, 2.0))
    with pytest.raises(ValueError):
        SensorReading(0, SensorKind.SOUND, (float("inf"),))


def test_from_readings_matches_parse(tmp_path):
    readings = [
        SensorReading(150, SensorKind.SOUND, (3.0,), 2),
        SensorReading(50, SensorKind.ACCELEROMETER, (1.0, 2.0, 3.0), 3),
        SensorReading(100, SensorKind.SOUND, (2.0,), 2),
    ]
    s = RecordingSession.from_readings("x", "U1", ActivityClass.TRAIN, readings)
    p = tmp_path / "x.csv"
    write_log(s, p)
    assert parse_log(p, "train", "U1") == s
    assert [r.timestamp for r in s.readings] == [0, 50, 100]


# canonical sessions: timestamps start at 0, values arbitrary finite floats
_finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def canonical_sessions(draw):
    kinds = draw(st.lists(st.sampled_from(list(SensorKind)), min_size=1, max_size=4, unique=True))
    readings = []
    for k in kinds:
        n = draw(st.integers(1, 6))
        for _ in range(n):
            t = draw(st.integers(0, 10_000))
            vals = tuple(draw(st.lists(_finite, min_size=k.axes, max_size=k.axes)))
            readings.append(SensorReading(t, k, vals, draw(st.integers(0, 3))))
    return RecordingSession.from_readings("s", "U9", draw(st.sampled_from(list(ActivityClass))), readings)


@settings(max_examples=60, deadline=None)
@given(canonical_sessions())
def test_parse_write_round_trip(session):
    text = session_to_csv(session)
    back = read_log(io.StringIO(text), session.label, session.user_id, session.session_id)
    assert back == session
    for r in back.readings:
        assert len(r.values) == r.sensor.axes
    ts = [r.timestamp for r in back.readings]
    assert ts == sorted(ts)


def test_manifest(tmp_path):
    synth = synthesize_session("car", 6, [SensorKind.SOUND], seed=1)
    write_log(synth, tmp_path / "a.csv")
    (tmp_path / "sub").mkdir()
    write_log(synth, tmp_path / "sub" / "b.csv")
    (tmp_path / "m.csv").write_text("path,user_id,label\na.csv,U1,car\nsub/b.csv,U2,bus\n")
    sessions = ingest_manifest(tmp_path / "m.csv", jobs=2)
    assert [s.session_id for s in sessions] == ["a", "sub/b"]
    assert [s.user_id for s in sessions] == ["U1", "U2"]
    assert sessions[1].label is ActivityClass.BUS


# --- synthetic generator --------------------------------------------------


def _magnitude_std(session, kind):
    return float(np.std(session.streams[kind].magnitude))


def test_synth_still_is_quieter_than_walking():
    still = synthesize_session("still", 10, [SensorKind.ACCELEROMETER], seed=1)
    walk = synthesize_session("walking", 10, [SensorKind.ACCELEROMETER], seed=1)
    assert len(still.streams[SensorKind.ACCELEROMETER]) == 200
    s_std, w_std = _magnitude_std(still, SensorKind.ACCELEROMETER), _magnitude_std(walk, SensorKind.ACCELEROMETER)
    p_still = PROFILES[ActivityClass.STILL][SensorKind.ACCELEROMETER]
    p_walk = PROFILES[ActivityClass.WALKING][SensorKind.ACCELEROMETER]
    # still: pure noise; walking: a sinusoid of amplitude A has std A / sqrt(2)
    assert s_std < 3 * p_still.noise
    assert w_std > p_walk.amplitude / np.sqrt(2) * 0.8
    assert s_std < w_std


def test_synth_deterministic():
    a = synthesize_session("train", 10, FEATURE_SENSORS, seed=1)
    b = synthesize_session("train", 10, FEATURE_SENSORS, seed=1)
    assert a == b
    assert session_to_csv(a) == session_to_csv(b)
    assert a != synthesize_session("train", 10, FEATURE_SENSORS, seed=2)


def test_synth_walking_speed_in_band():
    s = synthesize_session("walking", 10, [SensorKind.ACCELEROMETER, SensorKind.SPEED], seed=2)
    lo, hi = PROFILES[ActivityClass.WALKING][SensorKind.SPEED].band
    mean = float(s.streams[SensorKind.SPEED].values.mean())
    assert lo <= mean <= hi
    assert hi < PROFILES[ActivityClass.BUS][SensorKind.SPEED].band[0]


@pytest.mark.parametrize("seconds", [0, -1, 0.01, float("nan")])
def test_synth_invalid_duration(seconds):
    with pytest.raises(InvalidDuration):
        synthesize_session("bus", seconds, [SensorKind.SOUND], seed=0)


def test_synth_rate_ceiling():
    s = synthesize_session("bus", 7.3, FEATURE_SENSORS, seed=3)
    for stream in s.streams.values():
        gaps = np.diff(stream.timestamps)
        assert gaps.min() >= 50
        assert len(stream) <= 7.3 * 20


def test_synth_excluded_sensors_available():
    s = synthesize_session("bus", 2, [SensorKind.LIGHT, SensorKind.GRAVITY], seed=3)
    assert s.streams[SensorKind.GRAVITY].values.shape == (40, 3)


def test_corpus_layout():
    c = synthesize_corpus(1, minutes_per_class=1, sessions_per_class=3, users=2)
    assert len(c) == 15
    assert len({s.session_id for s in c}) == 15
    assert {s.user_id for s in c} == {"U1", "U2"}
    assert c == synthesize_corpus(1, minutes_per_class=1, sessions_per_class=3, users=2)
