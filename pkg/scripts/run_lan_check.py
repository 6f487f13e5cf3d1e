#!/usr/bin/env python3
"""Run the LAN remainder Monte Carlo check (forwards to `mfboundary lan-check`).

Example:
    python scripts/run_lan_check.py --sigma 1 --n-grid 128,1024 --h 0,1 --reps 500
"""

import sys

from mfboundary.cli import main

if __name__ == "__main__":
    sys.exit(main(["lan-check", *sys.argv[1:]]))
