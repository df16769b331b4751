"""Train the adaptive method on the river-crossing task.

Short demonstration run (50 iterations, horizon 256); pass extra CLI
arguments to override anything, e.g.::

    python3 scripts/train_frogger.py --seed 3 --override ppo.total_iterations=200
"""

import sys
import tempfile
from pathlib import Path

from pastarl.cli import main

CONFIG = """
[environment]
name = frogger

[algorithm]
name = pasta
preference = 0.334, 0.333, 0.333

[ppo]
horizon = 256
total_iterations = 50
seed = 0

[output]
dir = runs/frogger_demo
eval_every = 10
"""

if __name__ == "__main__":
    with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as f:
        f.write(CONFIG)
        cfg_path = f.name
    argv = ["train", "--config", cfg_path, *sys.argv[1:]]
    rc = main(argv)
    Path(cfg_path).unlink()
    sys.exit(rc)
