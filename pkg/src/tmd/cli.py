"""``tmd`` command line front end."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .dataset import (
    SENSOR_SETS,
    SensorSet,
    SplitSpec,
    balance_classes,
    build_dataset,
    load_features,
    read_csv,
    save_features,
    select_sensor_set,
    split,
)
from .errors import ConfigError, TMDError
from .eval import (
    evaluate,
    external_label_eval,
    importance_map,
    loo_report,
    multiclass_table,
    pairwise_matrix,
    read_external_predictions,
    write_rows,
)
from .features import FeatureSchema, Imputer, WindowingConfig
from .ingest import (
    FEATURE_SENSORS,
    ActivityClass,
    SensorKind,
    ingest_manifest,
    synthesize_corpus,
    synthesize_session,
    write_log,
)
from .models import ForestParams, TreeParams, cross_validate_grid, fit_model, load_model, prepare, save_model

log = logging.getLogger("tmd")


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return o.as_posix()
    if isinstance(o, (set, frozenset)):
        return sorted(_jsonable(x) if not isinstance(x, str) else x for x in o)
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def load_sessions(config: ExperimentConfig, jobs: int = 1):
    if config.synthetic is not None:
        s = config.synthetic
        return synthesize_corpus(config.seed, s.minutes_per_class, s.sessions_per_class, s.users, s.sensors)
    return ingest_manifest(config.manifest, strict=not config.lenient, jobs=jobs)


def prepare_dataset(config: ExperimentConfig, jobs: int = 1):
    sessions = load_sessions(config, jobs)
    members = set().union(*(s.members for s in config.sensor_sets))
    schema = FeatureSchema(tuple(members), config.per_axis)
    dataset = build_dataset(sessions, schema, config.windowing, jobs)
    if config.balance:
        dataset = balance_classes(dataset, dataset.classes, config.balance_mode, config.seed)
    return dataset


def run(config: ExperimentConfig, jobs: int = 1) -> int:
    """Execute the configured experiments and write their tables.

    Returns 0 when every experiment completed and 1 otherwise; failures are
    listed in ``run_manifest.json``.
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    dataset = prepare_dataset(config, jobs)
    failures: dict[str, str] = {}
    written: list[str] = []

    if config.grid:
        train, _ = split(dataset, config.split)
        grid = [config.with_classifier(c).forest for c in config.grid]
        result = cross_validate_grid(_impute(train), train.y, grid, config.cv_folds, config.seed,
                                     len(ActivityClass))
        config = config.with_classifier(config.grid[result.best_index])
        rows = [dict(candidate=i, **c, mean_accuracy=float(m)) for i, (c, m) in
                enumerate(zip(config.grid, result.mean_scores))]
        write_rows(rows, out / "cv.csv")
        written.append("cv.csv")

    params = config.forest
    experiments = {
        "multiclass": lambda: _run_multiclass(config, dataset, jobs),
        "pairwise": lambda: _run_table(
            pairwise_matrix(dataset, config.sensor_sets, params, config.split, jobs=jobs).rows(), out / "pairwise.csv"),
        "importance": lambda: _run_table(
            importance_map(dataset, config.sensor_sets, params, config.split, jobs=jobs).rows(), out / "importance.csv"),
        "loo": lambda: _run_table(
            loo_report(dataset, config.sensor_sets, params, config.split, jobs=jobs).rows(), out / "loo.csv"),
        "external": lambda: _run_external(config, dataset),
    }
    for name in config.experiments:
        try:
            written.extend(experiments[name]())
        except (TMDError, ValueError, OSError) as exc:
            log.error("experiment %s failed: %s", name, exc)
            failures[name] = f"{type(exc).__name__}: {exc}"

    manifest = {
        "config": config.raw,
        "seed": config.seed,
        "schema_hash": dataset.schema.hash,
        "schema": dataset.schema.to_dict(),
        "n_windows": len(dataset),
        "class_windows": {c.name.lower(): int(np.sum(dataset.y == c)) for c in dataset.classes},
        "classifier": dataclasses.asdict(config.forest),
        "versions": {"tmd": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "outputs": sorted(written),
        "failures": failures,
    }
    _atomic_write_text(out / "run_manifest.json", _json(manifest))
    return 1 if failures else 0


def _impute(ds):
    return Imputer.fit(ds.X, ds.missing).transform(ds.X, ds.missing)


def _run_table(rows, path: Path) -> list[str]:
    write_rows(rows, path)
    return [path.name]


def _run_multiclass(config: ExperimentConfig, dataset, jobs) -> list[str]:
    algorithms = {a.upper(): config.params_for(a) for a in config.algorithms}
    table = multiclass_table(dataset, config.sensor_sets, algorithms, config.split, jobs)
    rows = [{"sensor_set": s, "algorithm": a, "accuracy": r.accuracy, "n_test": r.total}
            for (s, a), r in table.items()]
    write_rows(rows, config.output_dir / "table3.csv")
    reports = {f"{s}/{a}": r.to_dict() for (s, a), r in table.items()}
    _atomic_write_text(config.output_dir / "multiclass.json", _json(reports))
    return ["table3.csv", "multiclass.json"]


def _run_external(config: ExperimentConfig, dataset) -> list[str]:
    preds = read_external_predictions(config.external_predictions)
    result = external_label_eval(preds, dataset)
    write_rows(result.rows(), config.output_dir / "external.csv")
    summary = {"total": result.total, "classified": result.classified,
               "coverage": float(result.coverage),
               "credited": {c.name.lower(): n for c, n in result.credited.items()}}
    _atomic_write_text(config.output_dir / "external.json", _json(summary))
    return ["external.csv", "external.json"]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _sensor_list(text: str | None):
    if not text:
        return FEATURE_SENSORS
    try:
        return tuple(SensorKind(s.strip().lower()) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _sensor_sets(names: str | None) -> tuple[SensorSet, ...]:
    if not names:
        return SENSOR_SETS
    by_name = {s.name.lower(): s for s in SENSOR_SETS}
    try:
        return tuple(by_name[n.strip().lower()] for n in names.split(","))
    except KeyError as exc:
        raise ConfigError(f"unknown sensor set {exc.args[0]!r}; use D1, D2 or D3") from None


def _forest(args) -> ForestParams:
    tree = TreeParams(args.max_depth, args.min_samples_split, args.min_samples_leaf)
    return ForestParams(args.trees, args.features_per_split, not args.no_bootstrap, args.seed, tree)


def _params(args):
    forest = _forest(args)
    return forest.tree if getattr(args, "algorithm", "rf") == "dt" else forest


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get("TMD_OUTPUT_DIR") or "tmd-output")
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_run(args) -> int:
    config = load_config(args.config, args.out_dir)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed, split=dataclasses.replace(config.split, seed=args.seed),
                                     forest=dataclasses.replace(config.forest, seed=args.seed))
    return run(config, args.jobs)


def cmd_synth(args) -> int:
    session = synthesize_session(args.activity, args.seconds, _sensor_list(args.sensors), args.seed, args.user)
    if args.out:
        write_log(session, args.out)
    else:
        write_log(session, sys.stdout)
    return 0


def cmd_ingest(args) -> int:
    sessions = ingest_manifest(args.manifest, strict=not args.lenient, jobs=args.jobs)
    w = sys.stdout
    w.write("session_id,user_id,label,readings,duration_ms,skipped_lines\n")
    for s in sessions:
        w.write(f"{s.session_id},{s.user_id},{s.label.name.lower()},{len(s)},{s.duration},{s.skipped_lines}\n")
    return 0


def cmd_featurize(args) -> int:
    sessions = ingest_manifest(args.manifest, strict=not args.lenient, jobs=args.jobs)
    schema = FeatureSchema(_sensor_list(args.sensors), args.per_axis)
    dataset = build_dataset(sessions, schema, WindowingConfig(args.window, args.overlap), args.jobs)
    if args.balance:
        dataset = balance_classes(dataset, dataset.classes, seed=args.seed)
    save_features(dataset, args.out)
    print(f"{len(dataset)} windows, schema {schema.hash} -> {args.out}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    dataset = load_features(args.features)
    if args.sensor_set:
        dataset = select_sensor_set(dataset, _sensor_sets(args.sensor_set)[0])
    model = fit_model(dataset, _params(args), jobs=args.jobs)
    save_model(model, args.out)
    print(f"trained on {len(dataset)} windows -> {args.out}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if args.features:
        data = load_features(args.features)
    else:
        data = read_csv(io.StringIO(sys.stdin.read()), labeled=False)
    if model.schema is not None and data.schema.hash != model.schema.hash:
        # tables may carry extra sensors; keep the model's columns only
        data = select_sensor_set(data, model.schema.sensors)
    for label in model.predict(prepare(model, data)):
        sys.stdout.write(ActivityClass(int(label)).name.lower() + "\n")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = load_features(args.features)
    if model.schema is not None and data.schema.hash != model.schema.hash:
        data = select_sensor_set(data, model.schema.sensors)
    report = evaluate(model, data)
    text = _json(report.to_dict())
    if args.out:
        _atomic_write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def _experiment_inputs(args):
    data = load_features(args.features)
    if args.balance:
        data = balance_classes(data, data.classes, seed=args.seed)
    return data, _sensor_sets(args.sensor_sets), _forest(args), SplitSpec(args.split, args.test_fraction, args.seed)


def cmd_pairwise(args) -> int:
    data, sets, params, spec = _experiment_inputs(args)
    write_rows(pairwise_matrix(data, sets, params, spec, jobs=args.jobs).rows(), _out_dir(args) / "pairwise.csv")
    return 0


def cmd_importance(args) -> int:
    data, sets, params, spec = _experiment_inputs(args)
    write_rows(importance_map(data, sets, params, spec, jobs=args.jobs).rows(), _out_dir(args) / "importance.csv")
    return 0


def cmd_loo(args) -> int:
    data, sets, params, spec = _experiment_inputs(args)
    users = args.users.split(",") if args.users else None
    write_rows(loo_report(data, sets, params, spec, users, args.jobs).rows(), _out_dir(args) / "loo.csv")
    return 0


def cmd_extmap(args) -> int:
    truth = load_features(args.truth)
    result = external_label_eval(read_external_predictions(args.pred), truth)
    if args.out:
        write_rows(result.rows(), args.out)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["true_class", "external_label", "count", "share"], lineterminator="\n")
        w.writeheader()
        w.writerows(result.rows())
        sys.stdout.write(buf.getvalue())
    print(f"coverage {result.classified}/{result.total} = {result.coverage_percent:.2f}%", file=sys.stderr)
    return 0


def _add_forest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-split", type=int, default=2)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", required=True, help="feature table (.npz or .csv)")
    p.add_argument("--sensor-sets", default=None, help="comma list of D1,D2,D3")
    p.add_argument("--split", choices=("grouped", "window"), default="grouped")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--balance", action="store_true")
    p.add_argument("--out-dir", default=None)
    _add_forest_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmd", description="Transportation mode detection pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--jobs", type=int, default=1, help="worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the experiments of a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write a synthetic session as canonical CSV")
    p.add_argument("--class", dest="activity", required=True)
    p.add_argument("--seconds", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sensors", default=None)
    p.add_argument("--user", default="synthetic")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse the logs of a manifest and summarize them")
    p.add_argument("--manifest", required=True)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="window and featurize the logs of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help=".npz cache or .csv table")
    p.add_argument("--sensors", default=None)
    p.add_argument("--window", type=float, default=5.0)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--per-axis", action="store_true")
    p.add_argument("--balance", action="store_true")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train a model on a feature table")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--algorithm", choices=("rf", "dt"), default="rf")
    p.add_argument("--sensor-set", default=None)
    _add_forest_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="one label per window; reads CSV from stdin by default")
    p.add_argument("--model", required=True)
    p.add_argument("--features", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="confusion matrix and accuracy as JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    for name, func, helptext in (
        ("pairwise", cmd_pairwise, "class-vs-class accuracy table"),
        ("importance", cmd_importance, "per-pair feature importance table"),
        ("loo", cmd_loo, "leave-one-user-out table"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_experiment_flags(p)
        if name == "loo":
            p.add_argument("--users", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("extmap", help="tally external recognizer predictions against the truth")
    p.add_argument("--pred", required=True, help="CSV window_id,external_label")
    p.add_argument("--truth", required=True, help="feature table with the true labels")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extmap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TMDError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
