"""Class-vs-class accuracy and which sensors separate each pair."""

from tmd.dataset import D1, D3, SplitSpec, balance_classes, build_dataset
from tmd.eval import importance_map, pair_name, pairwise_matrix
from tmd.ingest import synthesize_corpus
from tmd.models import ForestParams

data = balance_classes(build_dataset(synthesize_corpus(3, minutes_per_class=3, sessions_per_class=4, users=4)))
params = ForestParams(n_trees=30, seed=3)
spec = SplitSpec(seed=3)

matrix = pairwise_matrix(data, [D1, D3], params, spec)
for pair in matrix.pairs:
    print(f"{pair_name(pair):6s} D1 {matrix.get(*pair, 'D1'):.3f}  D3 {matrix.get(*pair, 'D3'):.3f}")

imp = importance_map(data, [D3], params, spec)
for pair in matrix.pairs:
    per_sensor = imp.sensor_importance(pair, "D3")
    best = max(per_sensor, key=per_sensor.get)
    print(f"{pair_name(pair):6s} leans on {best} ({per_sensor[best]:.2f})")
