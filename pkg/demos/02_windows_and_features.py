"""Cut a session into windows and summarize each sensor per window."""

import numpy as np

from tmd.features import FeatureSchema, Imputer, WindowingConfig, partition_windows, window_count, window_stats
from tmd.ingest import FEATURE_SENSORS, ActivityClass, SensorKind, synthesize_session

session = synthesize_session(ActivityClass.WALKING, 30.0, FEATURE_SENSORS, seed=1)

# 5 s windows without overlap, then 5 s windows with half overlap
for cfg in (WindowingConfig(5.0, 0.0), WindowingConfig(5.0, 0.5)):
    windows = partition_windows(session, cfg)
    print(f"overlap {cfg.overlap_fraction}: {len(windows)} windows, law says {window_count(session.duration, cfg)}")

# min, max, mean and std of the magnitude of each sensor: 6 sensors x 4 = 24 columns
schema = FeatureSchema(FEATURE_SENSORS)
windows = partition_windows(session, WindowingConfig())
vectors = [window_stats(w, schema) for w in windows]
X = np.vstack([v.values for v in vectors])
print(X.shape, schema.columns[:4])

# drop the speed sensor from every other window and fill it with training means
missing = np.vstack([v.missing for v in vectors])
cols = schema.sensor_columns(SensorKind.SPEED)
X[::2, cols], missing[::2, cols] = np.nan, True
imputer = Imputer.fit(X, missing)
filled = imputer.transform(X, missing)
print(schema.columns[cols[0]], "filled with", filled[0, cols[0]], "=", X[1::2, cols[0]].mean())
