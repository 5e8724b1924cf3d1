"""Hand-built datasets shared by unit and acceptance tests."""

from __future__ import annotations

import dataclasses

import numpy as np

from tmd.dataset import WindowedDataset
from tmd.features import FeatureSchema
from tmd.ingest import PROFILES, ActivityClass, SensorKind, SensorProfile

# published per-class recording time of the corpus, in seconds
PUBLISHED_CLASS_SECONDS = {
    ActivityClass.BUS: 1 * 3600 + 44 * 60 + 35,
    ActivityClass.CAR: 7 * 3600 + 53 * 60 + 50,
    ActivityClass.STILL: 7 * 3600 + 29 * 60 + 35,
    ActivityClass.TRAIN: 6 * 3600 + 20 * 60 + 25,
    ActivityClass.WALKING: 8 * 3600 + 20 * 60 + 25,
}

# uneven, made-up user weights per class (the table gives class totals only)
USER_WEIGHTS = {
    ActivityClass.BUS: {"U1": 5, "U2": 2},
    ActivityClass.CAR: {"U1": 1, "U3": 4, "U4": 2, "U5": 7},
    ActivityClass.STILL: {"U2": 3, "U3": 3, "U6": 1},
    ActivityClass.TRAIN: {"U1": 2, "U4": 9},
    ActivityClass.WALKING: {"U1": 3, "U2": 1, "U3": 1, "U5": 1, "U6": 1},
}


def user_counts(total: int, weights: dict[str, int]) -> dict[str, int]:
    """Floor shares, remainder to the last user."""
    W = sum(weights.values())
    out = {u: total * w // W for u, w in weights.items()}
    last = list(weights)[-1]
    out[last] += total - sum(out.values())
    return out


def labelled_dataset(layout, schema=None, window_seconds=5.0, seed=0):
    """Build a dataset from ``[(label, user, session, n_windows), ...]``.

    Feature values are seeded noise; only the provenance columns matter here.
    """
    schema = schema or FeatureSchema((SensorKind.SOUND,))
    rng = np.random.default_rng(seed)
    y, users, sessions, widx = [], [], [], []
    for label, user, session, n in layout:
        y += [int(label)] * n
        users += [user] * n
        sessions += [session] * n
        widx += list(range(n))
    X = rng.normal(size=(len(y), schema.feature_count))
    return WindowedDataset(schema, X, np.zeros(X.shape, bool), y, users, sessions, widx, window_seconds)


def published_durations_dataset() -> WindowedDataset:
    """5 s windows matching the published class durations, each user split over two sessions."""
    layout = []
    for label, seconds in PUBLISHED_CLASS_SECONDS.items():
        n = seconds // 5
        for user, k in user_counts(n, USER_WEIGHTS[label]).items():
            first = k // 2
            layout.append((label, user, f"{label.name}-{user}-a", first))
            layout.append((label, user, f"{label.name}-{user}-b", k - first))
    return labelled_dataset(layout)


def single_sensor_profiles(informative: SensorKind):
    """Generator profiles where classes differ only in ``informative``.

    Every other sensor uses one shared profile for all classes with no
    per-session variation, so it carries i.i.d. noise and nothing else.
    """
    shared = {k: dataclasses.replace(p, amplitude=0.0, spread=0.0, noise_spread=0.0) for k, p in PROFILES[ActivityClass.CAR].items()}
    out = {}
    for c in ActivityClass:
        prof = dict(shared)
        prof[informative] = SensorProfile(2.0 + 3.0 * int(c), 0.0, 0.0, 0.4, 0.2, 0.1)
        out[c] = prof
    return out


# 20 windows, four per class; predictions written by hand
EXTERNAL_PREDICTIONS = [
    ("bus:0", "in_vehicle"), ("bus:1", "on_foot"), ("bus:2", "running"),
    ("car:0", "in_vehicle"), ("car:1", "in_vehicle"), ("car:2", "still"),
    ("still:0", "still"), ("still:1", "still"), ("still:2", "tilting"), ("still:3", "unknown"),
    ("train:0", "still"), ("train:2", "in_vehicle"),
    ("walking:0", "walking"), ("walking:1", "on_foot"), ("walking:2", "on_bicycle"),
    ("walking:3", "still"), ("walking:3", "walking"),  # repeated window: the later answer stands
]

# tallied by hand from the list above
EXTERNAL_TALLY = {
    "classified": 15,
    "distribution": {
        ActivityClass.BUS: {"in_vehicle": 1, "on_foot": 1, "running": 1, "unknown": 1},
        ActivityClass.CAR: {"in_vehicle": 2, "still": 1, "unknown": 1},
        ActivityClass.STILL: {"still": 2, "tilting": 1, "unknown": 1},
        ActivityClass.TRAIN: {"still": 1, "in_vehicle": 1, "unknown": 2},
        ActivityClass.WALKING: {"walking": 2, "on_foot": 1, "on_bicycle": 1},
    },
    "credited": {
        ActivityClass.BUS: 1,
        ActivityClass.CAR: 2,
        ActivityClass.STILL: 2,
        ActivityClass.TRAIN: 1,
        ActivityClass.WALKING: 3,
    },
}


def external_truth() -> WindowedDataset:
    return labelled_dataset([(c, "U1", c.name.lower(), 4) for c in ActivityClass])
