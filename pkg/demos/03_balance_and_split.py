"""Equalize class sizes, then hold out whole sessions for testing."""

import numpy as np

from tmd.dataset import SplitSpec, balance_classes, build_dataset, split
from tmd.ingest import ActivityClass, synthesize_corpus

sessions = synthesize_corpus(0, minutes_per_class=2, sessions_per_class=3, users=3)
# give walking three times the recording time of the others
sessions += synthesize_corpus(1, minutes_per_class=4, sessions_per_class=2, users=3, classes=[ActivityClass.WALKING])
data = build_dataset(sessions)


def counts(ds):
    return {ActivityClass(c).name: int(n) for c, n in zip(*np.unique(ds.y, return_counts=True))}


print("raw:     ", counts(data))
balanced = balance_classes(data)
print("balanced:", counts(balanced))

# grouped split: no session appears on both sides
train, test = split(balanced, SplitSpec(seed=0))
print("train", len(train), "test", len(test))
print("shared sessions:", set(train.session_ids) & set(test.session_ids))
