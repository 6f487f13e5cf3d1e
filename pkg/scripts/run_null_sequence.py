#!/usr/bin/env python3
"""Run the critical-null Monte Carlo sequence (forwards to `mfboundary mc-null`).

Example:
    python scripts/run_null_sequence.py --reps 1000 --seed 20240802 --out-dir out/null
"""

import sys

from mfboundary.cli import main

if __name__ == "__main__":
    sys.exit(main(["mc-null", *sys.argv[1:]]))
