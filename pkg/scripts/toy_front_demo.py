"""Endpoint collapse vs interior recovery on the concave two-objective toy.

Writes toybench.csv under runs/toybench and prints per-scalarizer oracle-hit
counts.  Extra arguments pass straight through, e.g. ``--problem convex`` or
``--mu 0.5``.
"""

import sys

from pastarl.cli import main

if __name__ == "__main__":
    sys.exit(main(["toybench", "--out", "runs/toybench", *sys.argv[1:]]))
