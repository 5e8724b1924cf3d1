"""Score a third-party activity recognizer against our labels."""

from tmd.dataset import build_dataset
from tmd.eval import external_label_eval, is_credited
from tmd.ingest import ActivityClass, synthesize_corpus

truth = build_dataset(synthesize_corpus(0, minutes_per_class=0.5, sessions_per_class=1, users=1))
ids = [f"{s}:{w}" for s, w in zip(truth.session_ids, truth.window_index)]

# a recognizer that only answers every third window, and is vague about vehicles
answers = {ActivityClass.BUS: "in_vehicle", ActivityClass.CAR: "in_vehicle",
           ActivityClass.TRAIN: "still", ActivityClass.STILL: "still", ActivityClass.WALKING: "on_foot"}
preds = [(i, answers[ActivityClass(int(c))]) for i, c in zip(ids[::3], truth.y[::3])]

ev = external_label_eval(preds, truth)
print(f"answered {ev.classified}/{ev.total} = {ev.coverage_percent:.1f}%")
for c in ActivityClass:
    print(f"  {c.name:8s} credited {ev.credited[c]}")
print("in_vehicle counts for a train window:", is_credited("in_vehicle", ActivityClass.TRAIN))
