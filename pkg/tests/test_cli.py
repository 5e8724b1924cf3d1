import io
import json
import subprocess
import sys

import numpy as np
import pytest
from fixtures import EXTERNAL_PREDICTIONS, external_truth

from tmd.cli import main
from tmd.config import parse_config
from tmd.dataset import load_features, save_features
from tmd.errors import ConfigError
from tmd.ingest import ActivityClass, read_log

CONFIG = """
[experiment]
seed = 3
experiments = multiclass, pairwise, importance
algorithms = rf, dt

[synthetic]
minutes_per_class = 1
sessions_per_class = 3
users = 3

[sensor_sets]
D1 = accelerometer, gyroscope, sound
D3 = accelerometer, gyroscope, sound, linear_acceleration, rotation_vector, speed

[classifier]
n_trees = 8
"""


def _run_config(tmp_path, text, name):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text)
    out = tmp_path / name
    return main(["run", "--config", str(cfg), "--out-dir", str(out)]), out


def test_synth_to_stdout(capsys):
    assert main(["synth", "--class", "walking", "--seconds", "600", "--seed", "7"]) == 0
    text = capsys.readouterr().out
    session = read_log(io.StringIO(text), "walking", "U1")
    assert session.duration == (600 * 20 - 1) * 50
    assert len(session.streams) == 6


def test_run_writes_tables_and_is_reproducible(tmp_path):
    status, a = _run_config(tmp_path, CONFIG, "a")
    assert status == 0
    for name in ("table3.csv", "multiclass.json", "pairwise.csv", "importance.csv", "run_manifest.json"):
        assert (a / name).exists(), name
    status, b = _run_config(tmp_path, CONFIG, "b")
    assert status == 0
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes(), f.name
    manifest = json.loads((a / "run_manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["failures"] == {}
    assert len(manifest["schema_hash"]) == 16
    assert not list(a.glob("*.tmp"))


def test_unknown_sensor_is_config_error(tmp_path, capsys):
    bad = CONFIG.replace("D1 = accelerometer, gyroscope, sound", "D1 = accelerometer, sonar")
    with pytest.raises(ConfigError):
        parse_config(bad)
    status, out = _run_config(tmp_path, bad, "bad")
    assert status == 2
    assert "sonar" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\nexperiments = multiclass\n[synthetic]\n",  # no seed
        "[experiment]\nseed = 1\n[synthetic]\n[bogus]\n",
        "[experiment]\nseed = 1\ncolour = red\n[synthetic]\n",
        "[experiment]\nseed = 1\nexperiments = magic\n[synthetic]\n",
        "[experiment]\nseed = x\n[synthetic]\n",
    ],
)
def test_config_validation(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("TMD_OUTPUT_DIR", str(tmp_path / "env-out"))
    cfg = parse_config("[experiment]\nseed = 1\n[synthetic]\n")
    assert cfg.output_dir == tmp_path / "env-out"


def test_train_predict_eval_pipeline(tmp_path, small_dataset, monkeypatch, capsys):
    feats = tmp_path / "features.npz"
    save_features(small_dataset, feats)
    model = tmp_path / "m.json"
    assert main(["train", "--features", str(feats), "--out", str(model), "--trees", "5", "--sensor-set", "D1"]) == 0

    table = tmp_path / "windows.csv"
    save_features(small_dataset, table)
    monkeypatch.setattr(sys, "stdin", io.StringIO(table.read_text()))
    capsys.readouterr()
    assert main(["predict", "--model", str(model)]) == 0
    labels = capsys.readouterr().out.splitlines()
    assert len(labels) == len(small_dataset)
    assert set(labels) <= {"bus", "car", "still", "train", "walking"}

    assert main(["eval", "--model", str(model), "--features", str(feats)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["total"] == len(small_dataset)
    truth = [ActivityClass(int(c)).name.lower() for c in small_dataset.y]
    assert report["accuracy"] == pytest.approx(np.mean(np.array(labels) == np.array(truth)))


def test_predict_without_labels(tmp_path, small_dataset, monkeypatch, capsys):
    feats = tmp_path / "f.npz"
    save_features(small_dataset, feats)
    model = tmp_path / "m.json"
    main(["train", "--features", str(feats), "--out", str(model), "--trees", "3", "--sensor-set", "D1"])
    cols = small_dataset.schema.columns
    rows = [",".join(cols)] + [",".join(repr(float(v)) for v in small_dataset.X[i]) for i in range(3)]
    monkeypatch.setattr(sys, "stdin", io.StringIO("\n".join(rows) + "\n"))
    capsys.readouterr()
    assert main(["predict", "--model", str(model)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_extmap(tmp_path, capsys):
    truth = tmp_path / "truth.csv"
    save_features(external_truth(), truth)
    pred = tmp_path / "google.csv"
    pred.write_text("window_id,external_label\n" + "".join(f"{w},{lab}\n" for w, lab in EXTERNAL_PREDICTIONS))
    out = tmp_path / "extmap.csv"
    assert main(["extmap", "--pred", str(pred), "--truth", str(truth), "--out", str(out)]) == 0
    assert "15/20 = 75.00%" in capsys.readouterr().err
    lines = out.read_text().splitlines()
    assert lines[0] == "true_class,external_label,count,share"
    assert "bus,in_vehicle,1,0.25" in lines


def test_featurize_and_ingest(tmp_path, capsys):
    for i, cls in enumerate(("car", "walking")):
        main(["synth", "--class", cls, "--seconds", "20", "--seed", str(i), "--out", str(tmp_path / f"{cls}.csv")])
    (tmp_path / "m.csv").write_text("path,user_id,label\ncar.csv,U1,car\nwalking.csv,U2,walking\n")
    assert main(["ingest", "--manifest", str(tmp_path / "m.csv")]) == 0
    assert "car,U1,car,2400,19950,0" in capsys.readouterr().out
    out = tmp_path / "feat.csv"
    assert main(["featurize", "--manifest", str(tmp_path / "m.csv"), "--out", str(out)]) == 0
    ds = load_features(out)
    assert len(ds) == 6 and ds.X.shape[1] == 24


def test_entry_point_help():
    r = subprocess.run([sys.executable, "-m", "tmd.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("ingest", "synth", "featurize", "train", "predict", "eval", "pairwise", "importance", "loo", "extmap"):
        assert cmd in r.stdout
