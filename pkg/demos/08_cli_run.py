"""Run a whole experiment from a config file through the command line."""

import subprocess
import sys
import tempfile
from pathlib import Path

CONFIG = """
[experiment]
seed = 11
experiments = multiclass, pairwise, importance
algorithms = rf, dt

[synthetic]
minutes_per_class = 2
sessions_per_class = 3
users = 3

[classifier]
n_trees = 20
"""

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "demo.ini"
    cfg.write_text(CONFIG)
    out = Path(tmp) / "out"
    subprocess.run([sys.executable, "-m", "tmd.cli", "run", "--config", str(cfg), "--out-dir", str(out)], check=True)
    for f in sorted(out.iterdir()):
        print(f.name)
    print((out / "table3.csv").read_text())
