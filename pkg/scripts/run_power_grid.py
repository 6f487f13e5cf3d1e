#!/usr/bin/env python3
"""Run the Monte Carlo power grid (forwarding flags to `mfboundary mc-power`).

Example:
    python scripts/run_power_grid.py --reps 1000 --seed 20240801 --out-dir out/power
"""

import sys

from mfboundary.cli import main

if __name__ == "__main__":
    sys.exit(main(["mc-power", *sys.argv[1:]]))
