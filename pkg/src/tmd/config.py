"""Experiment configuration: an INI file with one section per pipeline stage.

Example::

    [experiment]
    seed = 7
    output_dir = out
    experiments = multiclass, pairwise, importance, loo, external
    algorithms = rf, dt
    balance = true

    [data]
    manifest = sessions.csv        ; or a [synthetic] section instead

    [windowing]
    window_length = 5
    overlap_fraction = 0

    [sensor_sets]
    D1 = accelerometer, gyroscope, sound

    [split]
    mode = grouped
    test_fraction = 0.2
    stratify = true

    [classifier]
    n_trees = 100
    max_depth = none

    [grid]                         ; optional k-fold search over the classifier
    k = 10
    n_trees = 50, 100
"""

from __future__ import annotations

import configparser
import itertools
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dataset import D1, D2, D3, SensorSet, SplitSpec
from .errors import ConfigError, UnknownSensor
from .features import WindowingConfig
from .ingest import FEATURE_SENSORS, SensorKind
from .models import ForestParams, TreeParams

EXPERIMENTS = ("multiclass", "pairwise", "importance", "loo", "external")
ALGORITHMS = ("rf", "dt")

_KNOWN = {
    "experiment": {"seed", "output_dir", "experiments", "algorithms", "balance", "balance_mode"},
    "data": {"manifest", "lenient"},
    "synthetic": {"minutes_per_class", "sessions_per_class", "users", "sensors"},
    "windowing": {"window_length", "overlap_fraction", "per_axis"},
    "sensor_sets": None,
    "split": {"mode", "test_fraction", "stratify"},
    "classifier": {"n_trees", "features_per_split", "bootstrap", "max_depth", "min_samples_split", "min_samples_leaf"},
    "grid": None,
    "external": {"predictions"},
}
_TREE_KEYS = ("max_depth", "min_samples_split", "min_samples_leaf")
_FOREST_KEYS = ("n_trees", "features_per_split", "bootstrap")


@dataclass(frozen=True)
class SyntheticSource:
    minutes_per_class: float = 10.0
    sessions_per_class: int = 5
    users: int = 5
    sensors: tuple[SensorKind, ...] = FEATURE_SENSORS


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    output_dir: Path
    experiments: tuple[str, ...] = ("multiclass", "pairwise", "importance")
    algorithms: tuple[str, ...] = ("rf",)
    manifest: Path | None = None
    lenient: bool = False
    synthetic: SyntheticSource | None = None
    windowing: WindowingConfig = WindowingConfig()
    per_axis: bool = False
    sensor_sets: tuple[SensorSet, ...] = (D1, D2, D3)
    balance: bool = True
    balance_mode: str = "earliest"
    split: SplitSpec = SplitSpec()
    forest: ForestParams = ForestParams()
    grid: tuple[dict, ...] = ()
    cv_folds: int = 10
    external_predictions: Path | None = None
    raw: dict = field(default_factory=dict)

    @property
    def tree(self) -> TreeParams:
        return self.forest.tree

    def params_for(self, algorithm: str):
        return self.forest if algorithm == "rf" else self.forest.tree

    def with_classifier(self, overrides: dict) -> "ExperimentConfig":
        tree = replace(self.forest.tree, **{k: v for k, v in overrides.items() if k in _TREE_KEYS})
        forest = replace(self.forest, tree=tree, **{k: v for k, v in overrides.items() if k in _FOREST_KEYS})
        return replace(self, forest=forest)


def _bool(section: str, key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got {text!r}")


def _num(section, key, text, kind=int, optional=False):
    t = text.strip()
    if optional and t.lower() in ("", "none", "null"):
        return None
    try:
        return kind(t)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {text!r}") from None


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _sensors(section: str, key: str, text: str) -> frozenset:
    try:
        return SensorSet.from_names(key, _list(text)).members
    except (UnknownSensor, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


_CLASSIFIER_TYPES = {
    "n_trees": (int, False),
    "features_per_split": (int, True),
    "bootstrap": (bool, False),
    "max_depth": (int, True),
    "min_samples_split": (int, False),
    "min_samples_leaf": (int, False),
}


def _classifier_value(section, key, text):
    kind, optional = _CLASSIFIER_TYPES[key]
    if kind is bool:
        return _bool(section, key, text)
    return _num(section, key, text, kind, optional)


def parse_config(text: str, base_dir: str | os.PathLike = ".", output_dir: str | None = None) -> ExperimentConfig:
    """Parse and validate a configuration. Every problem raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep sensor-set names as written
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    base = Path(base_dir)
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        allowed = _KNOWN[section]
        if allowed is not None:
            for key in cp[section]:
                if key not in allowed:
                    raise ConfigError(f"[{section}] unknown key {key!r}")
    if "experiment" not in cp or "seed" not in cp["experiment"]:
        raise ConfigError("[experiment] seed is mandatory")
    exp = cp["experiment"]
    seed = _num("experiment", "seed", exp["seed"])
    out = output_dir or exp.get("output_dir") or os.environ.get("TMD_OUTPUT_DIR") or "tmd-output"
    experiments = tuple(_list(exp.get("experiments", "multiclass, pairwise, importance")))
    for e in experiments:
        if e not in EXPERIMENTS:
            raise ConfigError(f"[experiment] unknown experiment {e!r}; choose from {', '.join(EXPERIMENTS)}")
    algorithms = tuple(a.lower() for a in _list(exp.get("algorithms", "rf")))
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"[experiment] unknown algorithm {a!r}")
    cfg = dict(
        seed=seed,
        output_dir=Path(out),
        experiments=experiments,
        algorithms=algorithms,
        balance=_bool("experiment", "balance", exp.get("balance", "true")),
        balance_mode=exp.get("balance_mode", "earliest").strip(),
    )
    if cfg["balance_mode"] not in ("earliest", "random"):
        raise ConfigError("[experiment] balance_mode must be earliest or random")

    if "data" in cp and "manifest" in cp["data"]:
        cfg["manifest"] = base / cp["data"]["manifest"].strip()
        cfg["lenient"] = _bool("data", "lenient", cp["data"].get("lenient", "false"))
    if "synthetic" in cp:
        s = cp["synthetic"]
        cfg["synthetic"] = SyntheticSource(
            minutes_per_class=_num("synthetic", "minutes_per_class", s.get("minutes_per_class", "10"), float),
            sessions_per_class=_num("synthetic", "sessions_per_class", s.get("sessions_per_class", "5")),
            users=_num("synthetic", "users", s.get("users", "5")),
            sensors=tuple(sorted(_sensors("synthetic", "sensors", s["sensors"])))
            if "sensors" in s
            else FEATURE_SENSORS,
        )
    if ("manifest" in cfg) == ("synthetic" in cfg):
        raise ConfigError("configure exactly one data source: [data] manifest or [synthetic]")

    if "windowing" in cp:
        w = cp["windowing"]
        try:
            cfg["windowing"] = WindowingConfig(
                _num("windowing", "window_length", w.get("window_length", "5"), float),
                _num("windowing", "overlap_fraction", w.get("overlap_fraction", "0"), float),
            )
        except ValueError as exc:
            raise ConfigError(f"[windowing] {exc}") from None
        cfg["per_axis"] = _bool("windowing", "per_axis", w.get("per_axis", "false"))

    if "sensor_sets" in cp and len(cp["sensor_sets"]):
        cfg["sensor_sets"] = tuple(
            SensorSet(name, _sensors("sensor_sets", name, value)) for name, value in cp["sensor_sets"].items()
        )

    if "split" in cp:
        sp = cp["split"]
        try:
            cfg["split"] = SplitSpec(
                sp.get("mode", "grouped").strip(),
                _num("split", "test_fraction", sp.get("test_fraction", "0.2"), float),
                seed,
                _bool("split", "stratify", sp.get("stratify", "true")),
            )
        except ValueError as exc:
            raise ConfigError(f"[split] {exc}") from None
    else:
        cfg["split"] = SplitSpec(seed=seed)

    clf = {k: _classifier_value("classifier", k, v) for k, v in cp["classifier"].items()} if "classifier" in cp else {}
    try:
        tree = TreeParams(**{k: v for k, v in clf.items() if k in _TREE_KEYS})
        cfg["forest"] = ForestParams(seed=seed, tree=tree, **{k: v for k, v in clf.items() if k in _FOREST_KEYS})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[classifier] {exc}") from None

    if "grid" in cp:
        g = dict(cp["grid"])
        cfg["cv_folds"] = _num("grid", "k", g.pop("k", "10"))
        if cfg["cv_folds"] < 2:
            raise ConfigError("[grid] k must be >= 2")
        axes = {}
        for key, text in g.items():
            if key not in _CLASSIFIER_TYPES:
                raise ConfigError(f"[grid] unknown parameter {key!r}")
            axes[key] = [_classifier_value("grid", key, v) for v in _list(text)]
        cfg["grid"] = tuple(dict(zip(axes, combo)) for combo in itertools.product(*axes.values()))

    if "external" in experiments:
        if "external" not in cp or "predictions" not in cp["external"]:
            raise ConfigError("experiment 'external' needs [external] predictions")
        cfg["external_predictions"] = base / cp["external"]["predictions"].strip()

    cfg["raw"] = {s: dict(cp[s]) for s in cp.sections()}
    config = ExperimentConfig(**cfg)
    for s in config.sensor_sets:
        missing = s.members - set(_available_sensors(config))
        if config.synthetic is not None and missing:
            raise ConfigError(f"sensor set {s.name} uses sensors the synthetic source lacks: "
                              f"{', '.join(sorted(m.value for m in missing))}")
    return config


def _available_sensors(config: ExperimentConfig):
    return config.synthetic.sensors if config.synthetic is not None else FEATURE_SENSORS


def load_config(path: str | os.PathLike, output_dir: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, path.parent, output_dir)
