#!/usr/bin/env python3
"""Run the exact trace ladder (forwards to `mfboundary traces`).

Examples:
    python scripts/run_trace_ladder.py --model mfbm --sigma 0.5
    python scripts/run_trace_ladder.py --model mfou --sigma 0.5 --alpha 1
"""

import sys

from mfboundary.cli import main

if __name__ == "__main__":
    sys.exit(main(["traces", *sys.argv[1:]]))
