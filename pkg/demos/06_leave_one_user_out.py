"""Train without one user, test on that user."""

from tmd.dataset import D1, SplitSpec, build_dataset
from tmd.eval import loo_report
from tmd.ingest import synthesize_corpus
from tmd.models import ForestParams

# two sessions per class over five users: each user covers only some classes
data = build_dataset(synthesize_corpus(3, minutes_per_class=2, sessions_per_class=2, users=5))
report = loo_report(data, [D1], ForestParams(n_trees=20, seed=0), SplitSpec(seed=0))
print("baseline:", report.baselines)
for row in report.rows():
    print(row)
