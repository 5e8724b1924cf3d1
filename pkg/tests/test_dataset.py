import io
from collections import Counter

import numpy as np
import pytest
from fixtures import PUBLISHED_CLASS_SECONDS, labelled_dataset, published_durations_dataset
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import largest_share_error

from tmd.dataset import (
    D1,
    D2,
    D3,
    SensorSet,
    SplitSpec,
    balance_classes,
    build_dataset,
    leave_user_out,
    load_features,
    load_npz,
    read_csv,
    save_features,
    select_sensor_set,
    split,
    write_csv,
)
from tmd.errors import DegenerateSplit, EmptyClass, SchemaMismatch, UnknownSensor, UnknownUser
from tmd.features import FeatureSchema
from tmd.ingest import ActivityClass, SensorKind, synthesize_corpus

B, C, S, T, W = ActivityClass


def _per_user(ds, label):
    return Counter(ds.user_ids[ds.y == label].tolist())


# --- sensor sets ----------------------------------------------------------


def test_sensor_sets_nested():
    assert D1.members == {SensorKind.ACCELEROMETER, SensorKind.GYROSCOPE, SensorKind.SOUND}
    assert D1.members < D2.members < D3.members
    assert D3.members - D2.members == {SensorKind.SPEED}


def test_sensor_set_validation():
    with pytest.raises(UnknownSensor):
        SensorSet.from_names("x", ["accelerometer", "sonar"])
    with pytest.raises(ValueError):
        SensorSet.from_names("x", ["light"])


def test_select_sensor_set(small_dataset):
    d1 = select_sensor_set(small_dataset, D1)
    assert d1.X.shape[1] == 12
    assert select_sensor_set(small_dataset, D3).schema == small_dataset.schema
    np.testing.assert_array_equal(select_sensor_set(small_dataset, D3).X, small_dataset.X)
    d2, d3 = select_sensor_set(small_dataset, D2), select_sensor_set(small_dataset, D3)
    extra = [c for c in d3.schema.columns if c not in d2.schema.columns]
    assert extra == ["speed_min", "speed_max", "speed_mean", "speed_std"]
    for col in d2.schema.columns:
        np.testing.assert_array_equal(d2.X[:, d2.schema.columns.index(col)], d3.X[:, d3.schema.columns.index(col)])
    with pytest.raises(UnknownSensor):
        select_sensor_set(d1, D3)


def test_build_dataset_parallel_matches_serial():
    sessions = synthesize_corpus(3, minutes_per_class=1, sessions_per_class=2, users=2)
    a, b = build_dataset(sessions), build_dataset(sessions, jobs=3)
    np.testing.assert_array_equal(a.X, b.X)
    assert a.window_ids == b.window_ids


# --- balancing ------------------------------------------------------------


def test_balance_published_durations():
    ds = published_durations_dataset()
    target = PUBLISHED_CLASS_SECONDS[B] // 5
    assert target == 1255
    out = balance_classes(ds)
    for c in ActivityClass:
        assert abs(int(np.sum(out.y == c)) - target) <= 1
        assert largest_share_error(_per_user(ds, c), _per_user(out, c), target) <= 1
    assert out.class_durations[B] == 6275.0


def test_balance_keeps_earliest_windows():
    ds = labelled_dataset([(B, "U1", "b1", 4), (C, "U1", "c1", 3), (C, "U1", "c2", 5)])
    out = balance_classes(ds, classes=[B, C])
    car = out.y == C
    assert list(zip(out.session_ids[car], out.window_index[car])) == [("c1", 0), ("c1", 1), ("c1", 2), ("c2", 0)]


def test_balance_already_balanced_is_identity():
    ds = labelled_dataset([(c, u, f"{c.name}{u}", 10) for c in ActivityClass for u in ("U1", "U2")])
    out = balance_classes(ds)
    assert out.window_ids == ds.window_ids


def test_balance_75_25_shares():
    ds = labelled_dataset([(W, "U1", "w1", 300), (W, "U2", "w2", 100), (B, "U1", "b1", 40)])
    out = balance_classes(ds, classes=[W, B])
    assert _per_user(out, W) == {"U1": 30, "U2": 10}


def test_balance_random_mode_seeded():
    ds = labelled_dataset([(W, "U1", "w1", 50), (B, "U1", "b1", 10)])
    a = balance_classes(ds, [W, B], mode="random", seed=3)
    assert a.window_ids == balance_classes(ds, [W, B], mode="random", seed=3).window_ids
    assert int(np.sum(a.y == W)) == 10


def test_balance_empty_class():
    ds = labelled_dataset([(W, "U1", "w1", 5)])
    with pytest.raises(EmptyClass):
        balance_classes(ds)
    # restricted to the classes present it is fine
    assert len(balance_classes(ds, classes=[W])) == 5


@st.composite
def layouts(draw):
    out = []
    for c in ActivityClass:
        for u in draw(st.lists(st.sampled_from(["U1", "U2", "U3", "U4"]), min_size=1, max_size=4, unique=True)):
            for k in range(draw(st.integers(1, 3))):
                out.append((c, u, f"{c.name}-{u}-{k}", draw(st.integers(1, 60))))
    return out


@settings(max_examples=60, deadline=None)
@given(layouts())
def test_balance_properties(layout):
    ds = labelled_dataset(layout)
    out = balance_classes(ds)
    counts = {c: int(np.sum(ds.y == c)) for c in ActivityClass}
    target = min(counts.values())
    for c in ActivityClass:
        kept = int(np.sum(out.y == c))
        assert kept <= counts[c]
        assert abs(kept - target) <= 1
        assert largest_share_error(_per_user(ds, c), _per_user(out, c), target) <= 1
    # kept rows are a subset of the input
    assert set(out.window_ids) <= set(ds.window_ids)


# --- splitting ------------------------------------------------------------


def test_grouped_split_ten_sessions():
    ds = labelled_dataset([(C, "U1", f"s{i}", 7) for i in range(10)])
    train, test = split(ds, SplitSpec(seed=5))
    assert len(test.sessions) == 2
    assert not set(train.sessions) & set(test.sessions)
    assert split(ds, SplitSpec(seed=5))[1].sessions == test.sessions


def test_window_split_hundred():
    ds = labelled_dataset([(C, "U1", "s", 100)])
    train, test = split(ds, SplitSpec(mode="window", test_fraction=0.2, seed=1))
    assert len(test) == 20 and len(train) == 80


def test_grouped_split_single_session_class():
    ds = labelled_dataset([(C, "U1", "c", 7), (B, "U1", "b1", 3), (B, "U1", "b2", 3)])
    with pytest.raises(DegenerateSplit):
        split(ds)


def test_split_is_filter_stable():
    layout = [(c, "U1", f"{c.name}{i}", 4) for c in ActivityClass for i in range(5)]
    ds = labelled_dataset(layout)
    _, full_test = split(ds, SplitSpec(seed=9))
    _, pair_test = split(ds.filter_classes([C, T]), SplitSpec(seed=9))
    assert pair_test.window_ids == full_test.filter_classes([C, T]).window_ids


@settings(max_examples=40, deadline=None)
@given(layouts(), st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.2, 0.5]))
def test_split_properties(layout, seed, frac):
    ds = labelled_dataset(layout)
    if any(len(set(ds.session_ids[ds.y == c])) < 2 for c in ActivityClass):
        with pytest.raises(DegenerateSplit):
            split(ds, SplitSpec(test_fraction=frac, seed=seed))
        return
    train, test = split(ds, SplitSpec(test_fraction=frac, seed=seed))
    assert not set(train.sessions) & set(test.sessions)
    assert sorted(train.window_ids + test.window_ids) == sorted(ds.window_ids)
    assert set(train.classes) == set(test.classes) == set(ActivityClass)
    # column restriction commutes with splitting
    tr1, te1 = split(select_sensor_set(ds, [SensorKind.SOUND]), SplitSpec(test_fraction=frac, seed=seed))
    assert tr1.window_ids == train.window_ids and te1.window_ids == test.window_ids


def test_select_commutes_with_split(small_dataset):
    spec = SplitSpec(seed=11)
    a_train, a_test = split(select_sensor_set(small_dataset, D1), spec)
    b_train, b_test = (select_sensor_set(p, D1) for p in split(small_dataset, spec))
    np.testing.assert_array_equal(a_train.X, b_train.X)
    np.testing.assert_array_equal(a_test.X, b_test.X)


# --- leave one user out ---------------------------------------------------


def test_leave_user_out():
    ds = labelled_dataset([(C, "U1", "a", 3), (W, "U1", "b", 3), (B, "U2", "c", 3), (C, "U3", "d", 3)])
    train, test = leave_user_out(ds, "U1")
    assert "U1" not in train.users
    assert set(test.users) == {"U1"}
    assert set(train.users) | set(test.users) == set(ds.users)
    train_cw, _ = leave_user_out(ds, "U1", classes=[C, W])
    assert set(train_cw.classes) <= {C, W}
    with pytest.raises(UnknownUser):
        leave_user_out(ds, "U13")


# --- serialization --------------------------------------------------------


def test_csv_round_trip(small_dataset):
    buf = io.StringIO()
    write_csv(small_dataset, buf)
    back = read_csv(io.StringIO(buf.getvalue()))
    np.testing.assert_array_equal(back.X, small_dataset.X)
    np.testing.assert_array_equal(back.missing, small_dataset.missing)
    assert back.window_ids == small_dataset.window_ids
    assert back.schema == small_dataset.schema


def test_npz_round_trip(tmp_path, small_dataset):
    p = tmp_path / "f.npz"
    save_features(small_dataset, p)
    back = load_features(p)
    np.testing.assert_array_equal(back.X, small_dataset.X)
    assert back.window_ids == small_dataset.window_ids
    with pytest.raises(SchemaMismatch):
        load_npz(p, expected_hash=FeatureSchema((SensorKind.SOUND,)).hash)


def test_csv_rejects_bad_columns():
    with pytest.raises(SchemaMismatch):
        read_csv(io.StringIO("sonar_min,sonar_max,sonar_mean,sonar_std,label\n1,2,3,4,car\n"))
