"""Intraday pipeline: one-minute bars -> per-day boundary statistics.

Stages: ``ingest`` (CSV to an ordered bar stream with row-level error
reporting), ``session_filter`` (keep days carrying the exact regular
session minute grid, 07:30-13:59 by default, i.e. 390 prices), then
per-day normalization of the 389 log returns so their uncentered sample
variance matches the Brownian benchmark Delta = 1/389, a per-day feasible
boundary statistic, and trailing rolling / calendar-subperiod summaries.

The pipeline is a pure function of the input bytes and the configuration:
outputs carry no timestamps and use fixed number formatting, so re-runs
(at any thread count) are byte-identical.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, time, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .boundary import CriticalCache, feasible_statistic_mfbm
from .covariance import SamplingDesign
from .experiments import format_float

__all__ = [
    "Bar",
    "IngestResult",
    "SessionWindow",
    "SessionDay",
    "DiscardedDay",
    "DailyRecord",
    "Subperiod",
    "PipelineConfig",
    "PipelineResult",
    "DEFAULT_SUBPERIODS",
    "ingest",
    "session_filter",
    "normalize_day",
    "daily_statistics",
    "rolling_and_subperiods",
    "run_pipeline",
]

NORMALIZATION_TOL = 1e-12


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bar:
    """One (timestamp, price) observation."""

    timestamp: datetime
    price: float


@dataclass(frozen=True)
class IngestResult:
    """Ordered bar stream plus row-level parse errors."""

    bars: list[Bar]
    errors: list[str]


@dataclass(frozen=True)
class SessionWindow:
    """Inclusive minute-resolution trading session."""

    start: time = time(7, 30)
    end: time = time(13, 59)

    def minutes(self) -> list[tuple[int, int]]:
        out = []
        h, m = self.start.hour, self.start.minute
        while (h, m) <= (self.end.hour, self.end.minute):
            out.append((h, m))
            m += 1
            if m == 60:
                h, m = h + 1, 0
        return out

    @property
    def n_prices(self) -> int:
        return len(self.minutes())

    @property
    def n_returns(self) -> int:
        return self.n_prices - 1


@dataclass(frozen=True)
class SessionDay:
    """A full session: prices on the minute grid and their log returns.

    ``scale`` is the normalization factor already applied to ``returns``
    (1.0 for a raw day); after :func:`normalize_day` the uncentered sample
    variance of ``returns`` equals 1/n_returns to ``NORMALIZATION_TOL``.
    """

    day: date
    prices: np.ndarray
    returns: np.ndarray
    scale: float = 1.0


@dataclass(frozen=True)
class DiscardedDay:
    """A day dropped by filtering or normalization, with its reason."""

    day: date
    reason: str


@dataclass(frozen=True)
class DailyRecord:
    """Per-day test outcome (or recorded failure)."""

    day: date
    statistic: float | None
    sigma_hat: float | None
    reject_10: bool | None
    reject_5: bool | None
    floored: bool | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class Subperiod:
    """Labelled closed date range for subperiod summaries."""

    label: str
    start: date
    end: date

    def contains(self, d: date) -> bool:
        return self.start <= d <= self.end


DEFAULT_SUBPERIODS: tuple[Subperiod, ...] = (
    Subperiod("2008-2009", date(2008, 1, 1), date(2009, 12, 31)),
    Subperiod("2010-2019", date(2010, 1, 1), date(2019, 12, 31)),
    Subperiod("2020-2021", date(2020, 1, 1), date(2021, 12, 31)),
)


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def _parse_timestamp(raw: str) -> datetime:
    """ISO-8601 or epoch-seconds timestamp, auto-detected per value."""
    text = raw.strip()
    try:
        epoch = float(text)
    except ValueError:
        pass
    else:
        return datetime.fromtimestamp(epoch, tz=timezone.utc).replace(tzinfo=None)
    iso = text.replace("Z", "+00:00") if text.endswith("Z") else text
    stamp = datetime.fromisoformat(iso)
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(timezone.utc).replace(tzinfo=None)
    return stamp


def ingest(
    path: str | Path,
    timestamp_column: str = "timestamp",
    price_column: str = "price",
    delimiter: str = ",",
) -> IngestResult:
    """Parse a bar CSV into an ordered stream, reporting bad rows by line.

    Rows with a missing field, an unparseable timestamp, or a
    non-positive/unparseable price are skipped and reported; they do not
    abort the run (a later filtering stage discards any day left with an
    incomplete grid).
    """
    path = Path(path)
    bars: list[Bar] = []
    errors: list[str] = []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot read input file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            return IngestResult(bars=[], errors=[])
        missing = [
            c for c in (timestamp_column, price_column) if c not in reader.fieldnames
        ]
        if missing:
            raise ValueError(
                f"{path}: missing required column(s) {missing}; "
                f"found {reader.fieldnames}"
            )
        for row in reader:
            line = reader.line_num
            raw_ts = row.get(timestamp_column)
            raw_px = row.get(price_column)
            if raw_ts is None or raw_px is None or raw_ts == "" or raw_px == "":
                errors.append(f"line {line}: missing timestamp or price field")
                continue
            try:
                stamp = _parse_timestamp(raw_ts)
            except ValueError:
                errors.append(f"line {line}: unparseable timestamp {raw_ts!r}")
                continue
            try:
                price = float(raw_px)
            except ValueError:
                errors.append(f"line {line}: unparseable price {raw_px!r}")
                continue
            if not np.isfinite(price) or price <= 0.0:
                errors.append(f"line {line}: non-positive price {raw_px!r}")
                continue
            bars.append(Bar(timestamp=stamp, price=price))
    return IngestResult(bars=bars, errors=errors)


# ---------------------------------------------------------------------------
# Session filtering and normalization
# ---------------------------------------------------------------------------

def session_filter(
    bars: Iterable[Bar], window: SessionWindow = SessionWindow()
) -> tuple[list[SessionDay], list[DiscardedDay]]:
    """Keep only days carrying the exact session minute grid.

    Out-of-window bars are dropped silently; a day is discarded (with a
    logged reason) if its timestamps are not strictly increasing, if a
    session minute appears twice, or if any session minute is missing.
    """
    grid = window.minutes()
    by_day: dict[date, list[Bar]] = {}
    for bar in bars:
        by_day.setdefault(bar.timestamp.date(), []).append(bar)

    days: list[SessionDay] = []
    discards: list[DiscardedDay] = []
    for day in sorted(by_day):
        day_bars = by_day[day]
        stamps = [b.timestamp for b in day_bars]
        if any(later <= earlier for earlier, later in zip(stamps, stamps[1:])):
            discards.append(DiscardedDay(day, "non-monotone timestamps"))
            continue
        in_window: dict[tuple[int, int], float] = {}
        duplicate = None
        for bar in day_bars:
            key = (bar.timestamp.hour, bar.timestamp.minute)
            if not (grid[0] <= key <= grid[-1]):
                continue
            if key in in_window:
                duplicate = key
                break
            in_window[key] = bar.price
        if duplicate is not None:
            discards.append(
                DiscardedDay(day, f"duplicate minute {duplicate[0]:02d}:{duplicate[1]:02d}")
            )
            continue
        if len(in_window) != len(grid) or any(k not in in_window for k in grid):
            discards.append(
                DiscardedDay(
                    day, f"incomplete session ({len(in_window)}/{len(grid)} minutes)"
                )
            )
            continue
        prices = np.array([in_window[k] for k in grid])
        returns = np.diff(np.log(prices))
        days.append(SessionDay(day=day, prices=prices, returns=returns))
    return days, discards


def normalize_day(day: SessionDay) -> SessionDay:
    """Scale returns so the uncentered sample variance equals 1/n_returns.

    The empirical diffusive variance is the second moment about zero
    (divisor n, no mean-centering: intraday drift over one minute is
    negligible and the model has no mean parameter).  Raises ValueError on
    a zero-variance (constant-price) day.
    """
    n = day.returns.size
    second_moment = float(np.mean(day.returns**2))
    if second_moment <= 0.0:
        raise ValueError(f"{day.day.isoformat()}: zero-variance day")
    scale = 1.0 / np.sqrt(n * second_moment)
    returns = day.returns * scale
    achieved = float(np.mean(returns**2))
    if abs(achieved - 1.0 / n) > NORMALIZATION_TOL:
        raise AssertionError(
            f"{day.day.isoformat()}: normalization check failed "
            f"({achieved} vs {1.0 / n})"
        )
    return SessionDay(
        day=day.day, prices=day.prices, returns=returns, scale=day.scale * scale
    )


# ---------------------------------------------------------------------------
# Daily statistics and summaries
# ---------------------------------------------------------------------------

def daily_statistics(
    days: Sequence[SessionDay], threads: int = 1
) -> list[DailyRecord]:
    """Feasible boundary statistic per day at design (n_returns, 1/n_returns).

    Per-day MLE failures become error records (the day is skipped in
    summaries).  Days are independent; results are assembled in date order
    regardless of thread count.
    """
    if not days:
        return []
    n = days[0].returns.size
    design = SamplingDesign(n=n, delta=1.0 / n)
    cache = CriticalCache(design)

    def one_day(day: SessionDay) -> DailyRecord:
        if day.returns.size != n:
            return DailyRecord(
                day=day.day,
                statistic=None,
                sigma_hat=None,
                reject_10=None,
                reject_5=None,
                floored=None,
                error=f"inconsistent return count {day.returns.size} != {n}",
            )
        try:
            res = feasible_statistic_mfbm(day.returns, design, cache=cache)
        except RuntimeError as exc:
            return DailyRecord(
                day=day.day,
                statistic=None,
                sigma_hat=None,
                reject_10=None,
                reject_5=None,
                floored=None,
                error=str(exc),
            )
        return DailyRecord(
            day=day.day,
            statistic=res.statistic,
            sigma_hat=res.sigma_hat,
            reject_10=res.reject_10,
            reject_5=res.reject_5,
            floored=res.floored,
        )

    if threads <= 1 or len(days) <= 1:
        return [one_day(d) for d in days]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one_day, days))


def _population_summary(records: Sequence[DailyRecord]) -> dict:
    good = [r for r in records if r.ok]
    if not good:
        return {
            "days": 0,
            "failures": len(records) - len(good),
            "mean_T": None,
            "median_T": None,
            "sd_T": None,
            "rej10": None,
            "rej5": None,
            "median_sigma": None,
        }
    t = np.array([r.statistic for r in good])
    s = np.array([r.sigma_hat for r in good])
    return {
        "days": len(good),
        "failures": len(records) - len(good),
        "mean_T": float(np.mean(t)),
        "median_T": float(np.median(t)),
        "sd_T": float(np.std(t, ddof=1)) if len(good) > 1 else None,
        "rej10": sum(r.reject_10 for r in good) / len(good),
        "rej5": sum(r.reject_5 for r in good) / len(good),
        "median_sigma": float(np.median(s)),
    }


def rolling_and_subperiods(
    records: Sequence[DailyRecord],
    window: int = 60,
    breakpoints: Sequence[Subperiod] = DEFAULT_SUBPERIODS,
) -> tuple[list[dict], list[dict]]:
    """Trailing rolling summaries and calendar-subperiod tables.

    Rolling rows start at the window-th retained day; a window exceeding
    the record count yields an empty (schema-valid) rolling table.  Each
    subperiod row covers the retained days inside its date range.
    """
    if window < 1:
        raise ValueError(f"rolling window must be >= 1, got {window}")
    good = [r for r in records if r.ok]
    t = np.array([r.statistic for r in good])
    rej5 = np.array([float(r.reject_5) for r in good])
    rolling = []
    for i in range(window - 1, len(good)):
        rolling.append(
            {
                "date": good[i].day,
                "roll_mean_T": float(np.mean(t[i - window + 1 : i + 1])),
                "roll_rej5": float(np.mean(rej5[i - window + 1 : i + 1])),
            }
        )
    sub_rows = []
    for period in breakpoints:
        members = [r for r in good if period.contains(r.day)]
        stats = _population_summary(members)
        sub_rows.append(
            {
                "period": period.label,
                "days": stats["days"],
                "mean_T": stats["mean_T"],
                "median_T": stats["median_T"],
                "rej10": stats["rej10"],
                "rej5": stats["rej5"],
                "median_sigma": stats["median_sigma"],
            }
        )
    return rolling, sub_rows


# ---------------------------------------------------------------------------
# Pipeline driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    """End-to-end pipeline configuration."""

    input_path: str | Path
    output_dir: str | Path
    timestamp_column: str = "timestamp"
    price_column: str = "price"
    delimiter: str = ","
    window: SessionWindow = SessionWindow()
    rolling_window: int = 60
    subperiods: tuple[Subperiod, ...] = DEFAULT_SUBPERIODS
    threads: int = 1


@dataclass(frozen=True)
class PipelineResult:
    """Everything the pipeline computed plus the paths it wrote."""

    records: list[DailyRecord]
    discards: list[DiscardedDay]
    parse_errors: list[str]
    summary: dict
    paths: dict[str, Path] = field(default_factory=dict)


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run ingest -> filter -> normalize -> test -> summarize and emit CSVs.

    Outputs in ``output_dir``: ``daily_records.csv`` (date, T, sigma_hat,
    reject10, reject5), ``rolling.csv`` (date, roll_mean_T, roll_rej5),
    ``subperiods.csv`` (period, days, mean_T, median_T, rej10, rej5,
    median_sigma) and ``run_metadata.json`` (config echo, discard log,
    full-sample summary; no timestamps, so outputs are byte-reproducible).
    """
    ingested = ingest(
        config.input_path,
        timestamp_column=config.timestamp_column,
        price_column=config.price_column,
        delimiter=config.delimiter,
    )
    days, discards = session_filter(ingested.bars, config.window)
    normalized: list[SessionDay] = []
    for day in days:
        try:
            normalized.append(normalize_day(day))
        except ValueError:
            discards.append(DiscardedDay(day.day, "zero-variance day"))
    records = daily_statistics(normalized, threads=config.threads)
    summary = _population_summary(records)
    rolling, sub_rows = rolling_and_subperiods(
        records, window=config.rolling_window, breakpoints=config.subperiods
    )

    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths: dict[str, Path] = {}

    daily_path = out / "daily_records.csv"
    _write_csv(
        daily_path,
        ["date", "T", "sigma_hat", "reject10", "reject5"],
        [
            [
                r.day.isoformat(),
                format_float(r.statistic),
                format_float(r.sigma_hat),
                "" if r.reject_10 is None else str(int(r.reject_10)),
                "" if r.reject_5 is None else str(int(r.reject_5)),
            ]
            for r in records
        ],
    )
    paths["daily_records.csv"] = daily_path

    rolling_path = out / "rolling.csv"
    _write_csv(
        rolling_path,
        ["date", "roll_mean_T", "roll_rej5"],
        [
            [
                row["date"].isoformat(),
                format_float(row["roll_mean_T"]),
                format_float(row["roll_rej5"]),
            ]
            for row in rolling
        ],
    )
    paths["rolling.csv"] = rolling_path

    sub_path = out / "subperiods.csv"
    _write_csv(
        sub_path,
        ["period", "days", "mean_T", "median_T", "rej10", "rej5", "median_sigma"],
        [
            [
                row["period"],
                str(row["days"]),
                format_float(row["mean_T"]),
                format_float(row["median_T"]),
                format_float(row["rej10"]),
                format_float(row["rej5"]),
                format_float(row["median_sigma"]),
            ]
            for row in sub_rows
        ],
    )
    paths["subperiods.csv"] = sub_path

    metadata = {
        "input_file": Path(config.input_path).name,
        "session_window": {
            "start": config.window.start.isoformat(timespec="minutes"),
            "end": config.window.end.isoformat(timespec="minutes"),
            "prices_per_day": config.window.n_prices,
        },
        "design": {
            "n": config.window.n_returns,
            "delta": 1.0 / config.window.n_returns,
        },
        "normalization": "uncentered second moment, divisor n",
        "rolling": {"window": config.rolling_window, "alignment": "trailing"},
        "subperiods": [
            {"label": p.label, "start": p.start.isoformat(), "end": p.end.isoformat()}
            for p in config.subperiods
        ],
        "parse_errors": ingested.errors,
        "discarded_days": [
            {"date": d.day.isoformat(), "reason": d.reason}
            for d in sorted(discards, key=lambda d: d.day)
        ],
        "full_sample": summary,
    }
    meta_path = out / "run_metadata.json"
    try:
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {meta_path}: {exc}") from exc
    paths["run_metadata.json"] = meta_path

    return PipelineResult(
        records=records,
        discards=discards,
        parse_errors=ingested.errors,
        summary=summary,
        paths=paths,
    )
