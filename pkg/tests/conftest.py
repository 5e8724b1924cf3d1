import sys

import numpy as np
import pytest

from tmd.dataset import balance_classes, build_dataset
from tmd.ingest import FEATURE_SENSORS, synthesize_corpus
from tmd.models.forest import ForestModel

SYNTH_SEED = 2024

# every ForestModel built during the run passes through this check
FORESTS_CHECKED: list[int] = []


@pytest.fixture(scope="session", autouse=True)
def _check_forest_importance():
    original = ForestModel.__init__

    def checked(self, *args, **kwargs):
        original(self, *args, **kwargs)
        imp = np.asarray(self.importance)
        if any(t.n_nodes > 1 for t in self.trees):
            assert (imp >= 0).all(), "negative importance"
            assert abs(imp.sum() - 1.0) <= 1e-9, f"importance sums to {imp.sum()!r}"
        FORESTS_CHECKED.append(len(self.trees))

    ForestModel.__init__ = checked
    yield
    ForestModel.__init__ = original


@pytest.fixture(scope="session")
def corpus():
    """10 minutes per class, 5 sessions per class, 5 users, every feature sensor."""
    return synthesize_corpus(SYNTH_SEED, minutes_per_class=10, sessions_per_class=5, users=5, sensors=FEATURE_SENSORS)


@pytest.fixture(scope="session")
def dataset(corpus):
    return balance_classes(build_dataset(corpus))


@pytest.fixture(scope="session")
def small_dataset():
    sessions = synthesize_corpus(7, minutes_per_class=2, sessions_per_class=3, users=3)
    return build_dataset(sessions)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results.values():
        terminalreporter.write_line(line)
    terminalreporter.write_line(f"importance checked on {len(FORESTS_CHECKED)} trained forests")
