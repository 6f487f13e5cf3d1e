#!/usr/bin/env python3
"""Regenerate the bundled synthetic intraday fixture.

The fixture is a boundary-generated panel: each trading day carries 390
one-minute prices on the 07:30-13:59 grid whose log returns are exact
critical mfBm increments (H = 3/4) at design (n = 389, Delta = 1/389)
with fractional scale sigma = 2e-4 — the order of magnitude the pipeline
recovers from real one-minute equity data.  A global return rescaling
keeps prices near 100; the pipeline's per-day variance normalization
makes the emitted statistics exactly invariant to that cosmetic factor.

Days are spread over 2008, 2015, and 2020 so the default calendar
subperiods are all populated.  Output is deterministic for a fixed seed.
"""

import argparse
import sys
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

from mfboundary.covariance import MfbmParams, SamplingDesign
from mfboundary.sampling import sample_mfbm_increments

N_RETURNS = 389
SIGMA = 2e-4
SEED = 20240900
START_DATES = (date(2008, 6, 2), date(2015, 6, 1), date(2020, 6, 1))
DAYS_PER_BLOCK = 84
SESSION_START = time(7, 30)
#: cosmetic per-minute return scale (the pipeline renormalizes per day)
RETURN_SCALE = 5e-4 * np.sqrt(N_RETURNS)


def business_days(start: date, count: int) -> list[date]:
    out = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--output",
        type=Path,
        default=Path(__file__).resolve().parent.parent
        / "src"
        / "mfboundary"
        / "fixtures"
        / "synthetic_panel.csv",
    )
    parser.add_argument("--seed", type=int, default=SEED)
    parser.add_argument("--days-per-block", type=int, default=DAYS_PER_BLOCK)
    args = parser.parse_args(argv)

    design = SamplingDesign(n=N_RETURNS, delta=1.0 / N_RETURNS)
    params = MfbmParams(sigma=SIGMA, hurst=0.75)
    days = []
    for start in START_DATES:
        days.extend(business_days(start, args.days_per_block))

    args.output.parent.mkdir(parents=True, exist_ok=True)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write("timestamp,price\n")
        for rep, day in enumerate(days):
            returns = RETURN_SCALE * sample_mfbm_increments(
                params, design, args.seed, rep
            )
            log_prices = np.concatenate([[0.0], np.cumsum(returns)])
            prices = 100.0 * np.exp(log_prices)
            stamp = datetime.combine(day, SESSION_START)
            for price in prices:
                fh.write(f"{stamp:%Y-%m-%d %H:%M:%S},{price:.10f}\n")
                stamp += timedelta(minutes=1)
    print(f"wrote {args.output} ({len(days)} days)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
