"""Sweep the main method and the linear baseline over seeds, then compare.

Produces runs/comparison/{pasta,linear}/... run directories and a combined
summary table under runs/comparison/tables.  This is the miniature version
of the full benchmark loop; raise total_iterations / seeds for real use.
"""

import sys
import tempfile
from pathlib import Path

from pastarl.cli import main

CONFIG = """
[environment]
name = frogger

[algorithm]
name = {algo}
preference = 0.334, 0.333, 0.333

[ppo]
horizon = 256
total_iterations = 30

[output]
eval_every = 10
"""


def run() -> int:
    root = Path("runs/comparison")
    run_dirs = []
    for algo in ("pasta", "linear"):
        with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as f:
            f.write(CONFIG.format(algo=algo))
            cfg_path = f.name
        rc = main([
            "sweep", "--config", cfg_path,
            "--out", str(root / algo),
            "--axis", "seed=0,1,2",
        ])
        Path(cfg_path).unlink()
        if rc != 0:
            return rc
        run_dirs.extend(str(p) for p in sorted((root / algo).iterdir()) if p.is_dir())
    return main(["compare", *run_dirs, "--out", str(root / "tables")])


if __name__ == "__main__":
    sys.exit(run())
