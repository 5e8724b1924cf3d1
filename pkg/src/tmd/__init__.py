"""Transportation mode detection from smartphone sensor logs.

Pipeline: :mod:`tmd.ingest` (logs to sessions) -> :mod:`tmd.features`
(5 s windows, min/max/mean/std per sensor) -> :mod:`tmd.dataset` (sensor
sets, balancing, splits) -> :mod:`tmd.models` (CART tree, random forest)
-> :mod:`tmd.eval` (experiment tables).
"""

__version__ = "0.1.0"

from .dataset import (
    D1,
    D2,
    D3,
    SENSOR_SETS,
    SensorSet,
    SplitSpec,
    WindowedDataset,
    balance_classes,
    build_dataset,
    leave_user_out,
    select_sensor_set,
    split,
)
from .features import (
    FeatureSchema,
    FeatureVector,
    Imputer,
    WindowingConfig,
    apply_imputer,
    fit_imputer,
    partition_windows,
    window_stats,
)
from .ingest import (
    ActivityClass,
    RecordingSession,
    SensorKind,
    SensorReading,
    parse_log,
    synthesize_corpus,
    synthesize_session,
    write_log,
)
from .models import (
    ForestModel,
    ForestParams,
    TreeModel,
    TreeParams,
    cross_validate_grid,
    fit_model,
    predict,
    predict_proba,
    train_forest,
    train_tree,
)
