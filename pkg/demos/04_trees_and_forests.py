"""Grow a tree and a forest on sensor-set D1 and compare them."""

from tmd.dataset import D1, SplitSpec, balance_classes, build_dataset, select_sensor_set, split
from tmd.eval import evaluate
from tmd.ingest import synthesize_corpus
from tmd.models import ForestParams, TreeParams, fit_model

data = balance_classes(build_dataset(synthesize_corpus(5, minutes_per_class=3, sessions_per_class=4, users=4)))
train, test = split(select_sensor_set(data, D1), SplitSpec(seed=5))

for name, params in (("tree", TreeParams()), ("forest", ForestParams(n_trees=50, seed=5))):
    report = evaluate(fit_model(train, params), test)
    print(f"{name:7s} accuracy {report.accuracy:.3f}")
    print(report.confusion)

# the forest spreads impurity reduction over the features; the shares sum to one
forest = fit_model(train, ForestParams(n_trees=50, seed=5))
top = sorted(zip(forest.importance, train.schema.columns), reverse=True)[:5]
for share, col in top:
    print(f"  {col:24s} {share:.3f}")
