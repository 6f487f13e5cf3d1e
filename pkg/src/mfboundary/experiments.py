"""Monte Carlo harness for the feasible boundary test.

Two canonical studies:

* a power grid over true Hurst values H >= 3/4 at a fixed design
  (n = 160, Delta = 0.01, sigma = 3 by default), measuring how fast the
  one-sided test picks up supercritical roughness; and
* a critical null sequence H = 3/4 along Delta = n^{-1/2}, n in
  {64, 128, 256, 512}, measuring the conservative finite-sample null
  (sd of T well below 1, rejection shares below nominal).

Replications are seeded by (seed, rep) counters so any single record can
be re-run in isolation and parallel execution is bit-identical to serial.
Failed replications (diverged restricted MLE) are excluded from summaries
but counted; floored sigma estimates are regular records.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .boundary import CriticalCache, TestResult, feasible_statistic_mfbm, feasible_statistic_mfou
from .covariance import MfbmParams, MfouParams, SamplingDesign
from .sampling import mfou_sampling_cholesky, sample_mfbm_increments, sample_mfou_path
from .spectral import H_CRITICAL

__all__ = [
    "PowerGridConfig",
    "NullSequenceConfig",
    "MfouCellConfig",
    "RepRecord",
    "CellSummary",
    "CellResult",
    "ExperimentResult",
    "summarize",
    "run_power_grid",
    "run_null_sequence",
    "run_mfou_cell",
    "emit",
    "format_float",
]


# ---------------------------------------------------------------------------
# Configs and result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerGridConfig:
    """Power study: mfBm data at true H over the grid, tested at H = 3/4."""

    hurst_grid: tuple[float, ...] = (0.75, 0.78, 0.80, 0.85, 0.90)
    n: int = 160
    delta: float = 0.01
    sigma: float = 3.0
    reps: int = 1000
    seed: int = 20240801
    threads: int = 1


@dataclass(frozen=True)
class NullSequenceConfig:
    """Critical null: H = 3/4 along the infill sequence Delta = n^{-1/2}."""

    n_grid: tuple[int, ...] = (64, 128, 256, 512)
    sigma: float = 3.0
    reps: int = 1000
    seed: int = 20240802
    threads: int = 1

    def delta_for(self, n: int) -> float:
        return 1.0 / math.sqrt(n)


@dataclass(frozen=True)
class MfouCellConfig:
    """Single-cell mfOU null study (no published table; ad hoc)."""

    n: int = 256
    delta: float = 0.05
    sigma: float = 1.0
    alpha: float = 1.0
    reps: int = 500
    seed: int = 20240803
    threads: int = 1


@dataclass(frozen=True)
class RepRecord:
    """One replication: test outcome or recorded failure."""

    rep: int
    seed: int
    statistic: float | None
    sigma_hat: float | None
    reject_10: bool | None
    reject_5: bool | None
    floored: bool | None
    alpha_hat: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CellSummary:
    """Summary block for one grid point; sd is None for fewer than 2 records."""

    count: int
    failures: int
    mean_t: float | None
    median_t: float | None
    sd_t: float | None
    rej10: float | None
    rej5: float | None
    mean_sigma: float | None
    sd_sigma: float | None


@dataclass(frozen=True)
class CellResult:
    """Records plus summary for one grid point."""

    label_name: str
    label_value: float
    design: SamplingDesign
    records: list[RepRecord]
    summary: CellSummary


@dataclass(frozen=True)
class ExperimentResult:
    """Full study: per-cell records/summaries plus a config echo."""

    name: str
    config: dict
    cells: list[CellResult] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def summarize(records: Sequence[RepRecord]) -> CellSummary:
    """Mean/median/unbiased-sd/rejection-share summary of the good records."""
    good = [r for r in records if r.ok]
    failures = len(records) - len(good)
    if not good:
        return CellSummary(
            count=0,
            failures=failures,
            mean_t=None,
            median_t=None,
            sd_t=None,
            rej10=None,
            rej5=None,
            mean_sigma=None,
            sd_sigma=None,
        )
    t = np.array([r.statistic for r in good])
    s = np.array([r.sigma_hat for r in good])
    sd_t = float(np.std(t, ddof=1)) if len(good) > 1 else None
    sd_s = float(np.std(s, ddof=1)) if len(good) > 1 else None
    return CellSummary(
        count=len(good),
        failures=failures,
        mean_t=float(np.mean(t)),
        median_t=float(np.median(t)),
        sd_t=sd_t,
        rej10=sum(r.reject_10 for r in good) / len(good),
        rej5=sum(r.reject_5 for r in good) / len(good),
        mean_sigma=float(np.mean(s)),
        sd_sigma=sd_s,
    )


# ---------------------------------------------------------------------------
# Replication runners
# ---------------------------------------------------------------------------

def _run_reps(
    reps: int,
    seed: int,
    threads: int,
    one_rep: Callable[[int], TestResult],
) -> list[RepRecord]:
    """Run replications 0..reps-1, serially or thread-parallel.

    Records are assembled in replication order regardless of scheduling,
    so parallel and serial runs are identical.
    """

    def record(rep: int) -> RepRecord:
        try:
            res = one_rep(rep)
        except RuntimeError as exc:
            return RepRecord(
                rep=rep,
                seed=seed,
                statistic=None,
                sigma_hat=None,
                reject_10=None,
                reject_5=None,
                floored=None,
                error=str(exc),
            )
        return RepRecord(
            rep=rep,
            seed=seed,
            statistic=res.statistic,
            sigma_hat=res.sigma_hat,
            reject_10=res.reject_10,
            reject_5=res.reject_5,
            floored=res.floored,
            alpha_hat=res.alpha_hat,
        )

    if threads <= 1 or reps <= 1:
        return [record(rep) for rep in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(record, range(reps)))


def run_power_grid(config: PowerGridConfig) -> ExperimentResult:
    """Feasible-test power over the Hurst grid (mfBm data)."""
    design = SamplingDesign(n=config.n, delta=config.delta)
    cache = CriticalCache(design)
    cells = []
    for hurst in config.hurst_grid:
        params = MfbmParams(sigma=config.sigma, hurst=hurst)

        def one_rep(rep: int, params=params) -> TestResult:
            x = sample_mfbm_increments(params, design, config.seed, rep)
            return feasible_statistic_mfbm(x, design, cache=cache)

        records = _run_reps(config.reps, config.seed, config.threads, one_rep)
        cells.append(
            CellResult(
                label_name="H",
                label_value=hurst,
                design=design,
                records=records,
                summary=summarize(records),
            )
        )
    return ExperimentResult(
        name="power_grid",
        config={
            "hurst_grid": list(config.hurst_grid),
            "n": config.n,
            "delta": config.delta,
            "sigma": config.sigma,
            "reps": config.reps,
            "seed": config.seed,
        },
        cells=cells,
    )


def run_null_sequence(config: NullSequenceConfig) -> ExperimentResult:
    """Feasible-test null behavior along Delta = n^{-1/2} at H = 3/4."""
    cells = []
    for n in config.n_grid:
        design = SamplingDesign(n=n, delta=config.delta_for(n))
        cache = CriticalCache(design)
        params = MfbmParams(sigma=config.sigma, hurst=H_CRITICAL)

        def one_rep(rep: int, params=params, design=design, cache=cache) -> TestResult:
            x = sample_mfbm_increments(params, design, config.seed, rep)
            return feasible_statistic_mfbm(x, design, cache=cache)

        records = _run_reps(config.reps, config.seed, config.threads, one_rep)
        cells.append(
            CellResult(
                label_name="n",
                label_value=float(n),
                design=design,
                records=records,
                summary=summarize(records),
            )
        )
    return ExperimentResult(
        name="null_sequence",
        config={
            "n_grid": list(config.n_grid),
            "sigma": config.sigma,
            "reps": config.reps,
            "seed": config.seed,
        },
        cells=cells,
    )


def run_mfou_cell(config: MfouCellConfig) -> ExperimentResult:
    """Single-design mfOU null study with the joint (sigma, alpha) MLE."""
    design = SamplingDesign(n=config.n, delta=config.delta)
    params = MfouParams(sigma=config.sigma, hurst=H_CRITICAL, alpha=config.alpha)
    chol = mfou_sampling_cholesky(params, design)

    def one_rep(rep: int) -> TestResult:
        x = sample_mfou_path(params, design, config.seed, rep, chol_lower=chol)
        return feasible_statistic_mfou(x, design)

    records = _run_reps(config.reps, config.seed, config.threads, one_rep)
    cell = CellResult(
        label_name="n",
        label_value=float(config.n),
        design=design,
        records=records,
        summary=summarize(records),
    )
    return ExperimentResult(
        name="mfou_cell",
        config={
            "n": config.n,
            "delta": config.delta,
            "sigma": config.sigma,
            "alpha": config.alpha,
            "reps": config.reps,
            "seed": config.seed,
        },
        cells=[cell],
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def format_float(x: float | None) -> str:
    """Deterministic float formatting shared by all emitted CSVs.

    Uses the shortest exact (round-trip) decimal representation, so
    parsing an emitted file recovers the in-memory values bit for bit.
    """
    if x is None:
        return ""
    return repr(float(x))


def _summary_row(cell: CellResult) -> list[str]:
    s = cell.summary
    return [
        format_float(cell.label_value),
        format_float(s.mean_t),
        format_float(s.sd_t),
        format_float(s.rej10),
        format_float(s.rej5),
        format_float(s.mean_sigma),
        format_float(s.sd_sigma),
    ]


def emit(result: ExperimentResult, output_dir: str | Path) -> dict[str, Path]:
    """Write summary CSV, full-record JSON, and plot-data CSVs.

    Files are named ``<study>_summary.csv``, ``<study>_records.json``,
    ``<study>_rejection_curve.csv``, ``<study>_sd_curve.csv``.  Output is
    byte-deterministic for fixed inputs (fixed column order, round-trip
    float formatting, LF newlines, sorted JSON keys).
    """
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    label = result.cells[0].label_name if result.cells else "x"
    paths: dict[str, Path] = {}

    def write_csv(name: str, header: list[str], rows: list[list[str]]) -> None:
        path = out / name
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(row) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths[name] = path

    write_csv(
        f"{result.name}_summary.csv",
        [label, "mean_T", "sd_T", "rej10", "rej5", "mean_sigma", "sd_sigma"],
        [_summary_row(c) for c in result.cells],
    )
    write_csv(
        f"{result.name}_rejection_curve.csv",
        [label, "rej10", "rej5"],
        [
            [
                format_float(c.label_value),
                format_float(c.summary.rej10),
                format_float(c.summary.rej5),
            ]
            for c in result.cells
        ],
    )
    write_csv(
        f"{result.name}_sd_curve.csv",
        [label, "sd_T", "sd_sigma"],
        [
            [
                format_float(c.label_value),
                format_float(c.summary.sd_t),
                format_float(c.summary.sd_sigma),
            ]
            for c in result.cells
        ],
    )

    payload = {
        "name": result.name,
        "config": result.config,
        "cells": [
            {
                "label_name": c.label_name,
                "label_value": c.label_value,
                "n": c.design.n,
                "delta": c.design.delta,
                "summary": {
                    "count": c.summary.count,
                    "failures": c.summary.failures,
                    "mean_T": c.summary.mean_t,
                    "median_T": c.summary.median_t,
                    "sd_T": c.summary.sd_t,
                    "rej10": c.summary.rej10,
                    "rej5": c.summary.rej5,
                    "mean_sigma": c.summary.mean_sigma,
                    "sd_sigma": c.summary.sd_sigma,
                },
                "records": [
                    {
                        "rep": r.rep,
                        "seed": r.seed,
                        "statistic": r.statistic,
                        "sigma_hat": r.sigma_hat,
                        "reject_10": r.reject_10,
                        "reject_5": r.reject_5,
                        "floored": r.floored,
                        "alpha_hat": r.alpha_hat,
                        "error": r.error,
                    }
                    for r in c.records
                ],
            }
            for c in result.cells
        ],
    }
    json_path = out / f"{result.name}_records.json"
    try:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {json_path}: {exc}") from exc
    paths[json_path.name] = json_path
    return paths
