"""Command-line interface.

Subcommands: ``constants``, ``simulate``, ``score``, ``test``,
``mc-power``, ``mc-null``, ``traces``, ``lan-check``, ``intraday``.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Every subcommand
accepts ``--seed`` (runs are deterministic under it), ``--threads``, and
``--config FILE`` pointing at a plain-text ``key = value`` manifest;
precedence is defaults < config file < command-line flags.  The
``MFBOUNDARY_OUTPUT_DIR`` environment variable sets the default output
directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from datetime import time
from pathlib import Path

import numpy as np

from . import asymptotics, experiments, intraday
from .boundary import feasible_statistic_mfbm, feasible_statistic_mfou
from .covariance import (
    MfbmParams,
    MfouParams,
    SamplingDesign,
    mfbm_bundle,
    mfou_bundle,
    mfou_critical_rows,
)
from .gaussian import normalized_scores, score_vector
from .sampling import mfou_sampling_cholesky, sample_mfbm_increments, sample_mfou_path
from .spectral import H_CRITICAL, critical_constants, gamma_crit

__all__ = ["main"]

_FMT = "%.12g"


class UsageError(Exception):
    """Invalid flags or flag combinations (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 on usage errors (default would be 2)."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Config-file support
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict[str, str]:
    """Parse a plain-text ``key = value`` manifest (# comments allowed)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _apply_config(parser: _Parser, namespace: argparse.Namespace, path: str, argv: list[str]) -> None:
    """Override defaults with config values for flags absent from argv."""
    config = _load_config(path)
    explicit = set()
    for action in parser._actions:
        for opt in action.option_strings:
            if any(a == opt or a.startswith(opt + "=") for a in argv):
                explicit.add(action.dest)
    known = {a.dest: a for a in parser._actions if a.dest != "help"}
    for key, raw in config.items():
        if key not in known:
            print(f"warning: ignoring unknown config key {key!r}", file=sys.stderr)
            continue
        if key in explicit:
            continue
        action = known[key]
        try:
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                value = _coerce_bool(raw)
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from exc
        setattr(namespace, key, value)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _default_output_dir() -> str:
    return os.environ.get("MFBOUNDARY_OUTPUT_DIR", ".")


def _add_common(parser: _Parser) -> None:
    parser.add_argument("--seed", type=int, default=12345, help="base RNG seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=max(1, os.cpu_count() or 1),
        help="worker thread cap (results are independent of this)",
    )
    parser.add_argument(
        "--config", type=str, default=None, help="key=value manifest file"
    )


def _float_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ValueError(f"bad comma-separated float list {text!r}") from exc


def _int_grid(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ValueError(f"bad comma-separated integer list {text!r}") from exc


def _session_time(text: str) -> time:
    try:
        hh, mm = text.split(":")
        return time(int(hh), int(mm))
    except ValueError as exc:
        raise ValueError(f"bad HH:MM time {text!r}") from exc


def _read_series(path: str, rep: int = 0) -> np.ndarray:
    """Read a data series from CSV.

    Accepts a headerless single column, a ``value`` column, or the
    ``rep,index,value`` long format written by ``simulate`` (filtered to
    the requested rep).
    """
    p = Path(path)
    if not p.exists():
        raise OSError(f"input file not found: {p}")
    try:
        with open(p, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read input file {p}: {exc}") from exc
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValueError(f"{p}: no data rows")
    header = [c.strip().lower() for c in rows[0]]
    if "value" in header:
        vcol = header.index("value")
        rcol = header.index("rep") if "rep" in header else None
        values = []
        for r in rows[1:]:
            if rcol is not None and int(r[rcol]) != rep:
                continue
            values.append(float(r[vcol]))
        if not values:
            raise ValueError(f"{p}: no rows for rep {rep}")
        return np.array(values)
    try:
        return np.array([float(r[0]) for r in rows])
    except ValueError:
        try:
            return np.array([float(r[0]) for r in rows[1:]])
        except ValueError as exc:
            raise ValueError(f"{p}: cannot parse data column") from exc


def _print_summary_table(result: experiments.ExperimentResult) -> None:
    label = result.cells[0].label_name if result.cells else "x"
    print(f"{label:>8} {'mean_T':>10} {'sd_T':>10} {'rej10':>7} {'rej5':>7} "
          f"{'mean_sigma':>11} {'sd_sigma':>9} {'fail':>5}")
    for cell in result.cells:
        s = cell.summary

        def fmt(x, width):
            return ("" if x is None else "%.4g" % x).rjust(width)

        print(
            f"{cell.label_value:8.4g} {fmt(s.mean_t, 10)} {fmt(s.sd_t, 10)} "
            f"{fmt(s.rej10, 7)} {fmt(s.rej5, 7)} {fmt(s.mean_sigma, 11)} "
            f"{fmt(s.sd_sigma, 9)} {s.failures:5d}"
        )


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_constants(args: argparse.Namespace) -> int:
    cc = critical_constants(args.sigma)
    gamma = gamma_crit(args.sigma, alpha=args.alpha)
    print(f"sigma = {_FMT % args.sigma}")
    print(f"K = {_FMT % cc.k}")
    print(f"beta = {_FMT % cc.beta}")
    print(f"c_H(3/4) = {_FMT % cc.c_h}")
    print(f"eta = {_FMT % cc.eta}")
    m = gamma.matrix
    print(f"Gamma_ss = {_FMT % m[0, 0]}")
    print(f"Gamma_sH = {_FMT % m[0, 1]}")
    print(f"Gamma_HH = {_FMT % m[1, 1]}")
    if args.alpha is not None:
        print(f"alpha = {_FMT % args.alpha}")
        print(f"Gamma_aa = {_FMT % m[2, 2]}")
    print(f"correlation = {_FMT % gamma.correlation}")
    print(f"I_eff = {_FMT % cc.i_eff}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    design = SamplingDesign(n=args.n, delta=args.delta)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1 for simulate")
    rows = []
    if args.model == "mfbm":
        params = MfbmParams(sigma=args.sigma, hurst=args.hurst)
        for rep in range(args.reps):
            x = sample_mfbm_increments(params, design, args.seed, rep)
            rows.extend((rep, i, v) for i, v in enumerate(x))
    else:
        if args.alpha is None:
            raise UsageError("simulate --model mfou requires --alpha")
        params = MfouParams(sigma=args.sigma, hurst=args.hurst, alpha=args.alpha)
        chol = mfou_sampling_cholesky(params, design)
        for rep in range(args.reps):
            x = sample_mfou_path(params, design, args.seed, rep, chol_lower=chol)
            rows.extend((rep, i, v) for i, v in enumerate(x))
    out = sys.stdout
    close = False
    if args.output is not None:
        out = open(args.output, "w", encoding="utf-8", newline="")
        close = True
    try:
        out.write("rep,index,value\n")
        for rep, i, v in rows:
            out.write(f"{rep},{i},{float(v)!r}\n")
    finally:
        if close:
            out.close()
            print(f"wrote {args.output}")
    return 0


def _make_bundle(model, sigma, hurst, alpha, design):
    if model == "mfbm":
        params = MfbmParams(sigma=sigma, hurst=hurst)
        return params, mfbm_bundle(params, design)
    if alpha is None:
        raise UsageError("--model mfou requires --alpha")
    params = MfouParams(sigma=sigma, hurst=hurst, alpha=alpha)
    if hurst == H_CRITICAL:
        from scipy.linalg import toeplitz

        from .covariance import CovarianceBundle

        rows = mfou_critical_rows(params, design)
        bundle = CovarianceBundle(
            sigma_matrix=toeplitz(rows["r"]),
            d_sigma=toeplitz(rows["d_sigma"]),
            d_hurst=toeplitz(rows["d_hurst"]),
            d_alpha=toeplitz(rows["d_alpha"]),
        )
    else:
        bundle = mfou_bundle(params, design)
    return params, bundle


def _cmd_score(args: argparse.Namespace) -> int:
    x = _read_series(args.input, rep=args.rep)
    design = SamplingDesign(n=x.size, delta=args.delta)
    params, bundle = _make_bundle(args.model, args.sigma, args.hurst, args.alpha, design)
    sv = score_vector(bundle, x, params, design)
    print(f"n = {x.size}")
    print(f"S_sigma = {_FMT % sv.s_sigma}")
    print(f"S_H = {_FMT % sv.s_hurst}")
    print(f"R_H = {_FMT % sv.r_hurst}")
    if sv.s_alpha is not None:
        print(f"S_alpha = {_FMT % sv.s_alpha}")
    if design.L > 0.0:
        ns = normalized_scores(sv, design, args.sigma)
        print(f"xi_sigma = {_FMT % ns.xi_sigma}")
        print(f"xi_H = {_FMT % ns.xi_hurst}")
        if ns.xi_alpha is not None:
            print(f"xi_alpha = {_FMT % ns.xi_alpha}")
    return 0


def _cmd_test(args: argparse.Namespace) -> int:
    x = _read_series(args.input, rep=args.rep)
    design = SamplingDesign(n=x.size, delta=args.delta)
    if args.model == "mfbm":
        res = feasible_statistic_mfbm(x, design)
    else:
        res = feasible_statistic_mfou(x, design)
    print(f"T = {_FMT % res.statistic}")
    print(f"sigma_hat = {_FMT % res.sigma_hat}")
    if res.alpha_hat is not None:
        print(f"alpha_hat = {_FMT % res.alpha_hat}")
    print(f"p_value = {_FMT % res.p_value}")
    print(f"reject_10 = {res.reject_10}")
    print(f"reject_5 = {res.reject_5}")
    if res.floored:
        print("note: restricted sigma estimate hit the zero boundary (floored)")
    return 0


def _cmd_mc_power(args: argparse.Namespace) -> int:
    config = experiments.PowerGridConfig(
        hurst_grid=args.hurst_grid,
        n=args.n,
        delta=args.delta,
        sigma=args.sigma,
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    result = experiments.run_power_grid(config)
    paths = experiments.emit(result, args.out_dir)
    _print_summary_table(result)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def _cmd_mc_null(args: argparse.Namespace) -> int:
    config = experiments.NullSequenceConfig(
        n_grid=args.n_grid,
        sigma=args.sigma,
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    result = experiments.run_null_sequence(config)
    paths = experiments.emit(result, args.out_dir)
    _print_summary_table(result)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def _cmd_traces(args: argparse.Namespace) -> int:
    designs = [SamplingDesign(n=n, delta=n ** -0.5) for n in args.n_grid]
    report = asymptotics.trace_ladder(
        args.sigma,
        designs,
        model=args.model,
        alpha=args.alpha if args.model == "mfou" else None,
        max_n=args.max_n,
    )
    keys = ["cc", "cd", "dd"] + (["aa", "ca_scaled", "da_scaled"] if args.model == "mfou" else [])
    header = f"{'n':>6} {'L':>8}" + "".join(f" {k:>12}" for k in keys)
    print("trace / predicted ratios:")
    print(header)
    for rung in report.rungs:
        line = f"{rung.n:6d} {rung.L:8.4f}"
        for k in keys:
            line += f" {rung.ratios[k]:12.6f}"
        print(line)
    largest = max(designs, key=lambda d: d.n)
    whittle = asymptotics.whittle_crosscheck(
        args.sigma, largest, alpha=args.alpha if args.model == "mfou" else None
    )
    top = report.rungs[-1]
    print(f"Whittle cross-check at n={largest.n}:")
    for k in ("cc", "cd", "dd"):
        exact = getattr(top.traces, f"tr_{k}")
        rel = abs(whittle[k] - exact) / abs(exact)
        print(f"  tr_{k}: exact {_FMT % exact}  whittle {_FMT % whittle[k]}  rel {rel:.4f}")
    if args.model == "mfou":
        exact = top.traces.tr_aa
        rel = abs(whittle["aa"] - exact) / abs(exact)
        print(f"  tr_aa: exact {_FMT % exact}  whittle {_FMT % whittle['aa']}  rel {rel:.4f}")
    if args.out_dir is not None:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"trace_ladder_{args.model}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,delta,L," + ",".join(f"ratio_{k}" for k in keys) + "\n")
            for rung in report.rungs:
                cells = [str(rung.n), _FMT % rung.delta, _FMT % rung.L]
                cells += [_FMT % rung.ratios[k] for k in keys]
                fh.write(",".join(cells) + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_lan_check(args: argparse.Namespace) -> int:
    h = args.h
    if len(h) != 2:
        raise UsageError("--h takes exactly two comma-separated components")
    print(f"{'n':>6} {'delta':>10} {'mean|R|':>10} {'mean R':>10} {'sd R':>10}")
    rows = []
    for n in args.n_grid:
        design = SamplingDesign(n=n, delta=n ** -0.5)
        summary = asymptotics.lan_quadratic_check(
            args.sigma, design, h, args.reps, args.seed
        )
        rows.append(summary)
        print(
            f"{n:6d} {design.delta:10.5f} {summary.mean_abs_remainder:10.5f} "
            f"{summary.mean_remainder:10.5f} {summary.sd_remainder:10.5f}"
        )
    if args.out_dir is not None:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "lan_check.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,delta,h1,h2,reps,mean_abs_remainder,mean_remainder,sd_remainder\n")
            for s in rows:
                fh.write(
                    ",".join(
                        [
                            str(s.n),
                            _FMT % s.delta,
                            _FMT % s.h[0],
                            _FMT % s.h[1],
                            str(s.reps),
                            _FMT % s.mean_abs_remainder,
                            _FMT % s.mean_remainder,
                            _FMT % s.sd_remainder,
                        ]
                    )
                    + "\n"
                )
        print(f"wrote {path}")
    return 0


def _cmd_intraday(args: argparse.Namespace) -> int:
    config = intraday.PipelineConfig(
        input_path=args.input,
        output_dir=args.out_dir,
        timestamp_column=args.timestamp_column,
        price_column=args.price_column,
        delimiter=args.delimiter,
        window=intraday.SessionWindow(start=args.session_start, end=args.session_end),
        rolling_window=args.rolling_window,
        threads=args.threads,
    )
    result = intraday.run_pipeline(config)
    s = result.summary
    print(f"days retained = {s['days']}")
    print(f"days discarded = {len(result.discards)}")
    print(f"parse errors = {len(result.parse_errors)}")
    if s["days"]:
        print(f"mean_T = {_FMT % s['mean_T']}")
        print(f"median_T = {_FMT % s['median_T']}")
        if s["sd_T"] is not None:
            print(f"sd_T = {_FMT % s['sd_T']}")
        print(f"rej10 = {_FMT % s['rej10']}")
        print(f"rej5 = {_FMT % s['rej5']}")
        print(f"median_sigma = {_FMT % s['median_sigma']}")
    for name in sorted(result.paths):
        print(f"wrote {result.paths[name]}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(
        prog="mfboundary",
        description="Boundary inference at H = 3/4 for mixed fractional models.",
    )
    sub = parser.add_subparsers(
        dest="command", metavar="COMMAND", parser_class=_Parser
    )

    p = sub.add_parser("constants",
                       help="print the critical constants for given sigma (and alpha)")
    p.add_argument("--sigma", type=float, default=1.0, help="fractional scale sigma")
    p.add_argument("--alpha", type=float, default=None, help="mfOU mean reversion")
    _add_common(p)
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("simulate",
                       help="simulate mfBm increments or a stationary mfOU path")
    p.add_argument("--model", choices=("mfbm", "mfou"), default="mfbm")
    p.add_argument("--n", type=int, required=True, help="observations per path")
    p.add_argument("--delta", type=float, required=True, help="sampling step")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--hurst", type=float, default=H_CRITICAL)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--reps", type=int, default=1, help="number of paths")
    p.add_argument("--output", type=str, default=None,
                   help="output CSV (rep,index,value); default stdout")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("score",
                       help="exact scores for a data file at given parameters")
    p.add_argument("--input", type=str, required=True, help="data CSV")
    p.add_argument("--rep", type=int, default=0, help="rep to select in long-format files")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--model", choices=("mfbm", "mfou"), default="mfbm")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--hurst", type=float, default=H_CRITICAL)
    p.add_argument("--alpha", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("test",
                       help="feasible boundary test for a data file")
    p.add_argument("--input", type=str, required=True, help="data CSV")
    p.add_argument("--rep", type=int, default=0, help="rep to select in long-format files")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--model", choices=("mfbm", "mfou"), default="mfbm")
    _add_common(p)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("mc-power",
                       help="Monte Carlo power grid over true Hurst values")
    p.add_argument("--hurst-grid", type=_float_grid,
                   default=(0.75, 0.78, 0.80, 0.85, 0.90))
    p.add_argument("--n", type=int, default=160)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--out-dir", type=str, default=_default_output_dir())
    _add_common(p)
    p.set_defaults(func=_cmd_mc_power)

    p = sub.add_parser("mc-null",
                       help="Monte Carlo critical-null sequence along delta = n^-1/2")
    p.add_argument("--n-grid", type=_int_grid, default=(64, 128, 256, 512))
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--out-dir", type=str, default=_default_output_dir())
    _add_common(p)
    p.set_defaults(func=_cmd_mc_null)

    p = sub.add_parser("traces",
                       help="exact trace ladder vs predicted critical scales")
    p.add_argument("--model", choices=("mfbm", "mfou"), default="mfbm")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n-grid", type=_int_grid, default=(256, 1024, 4096))
    p.add_argument("--max-n", type=int, default=asymptotics.MAX_TRACE_N,
                   help="dense-matrix size cap")
    p.add_argument("--out-dir", type=str, default=_default_output_dir())
    _add_common(p)
    p.set_defaults(func=_cmd_traces)

    p = sub.add_parser("lan-check",
                       help="Monte Carlo LAN remainder check along n-grid")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n-grid", type=_int_grid, default=(128, 1024))
    p.add_argument("--h", type=_float_grid, default=(1.0, 0.0),
                   help="local shift h1,h2")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--out-dir", type=str, default=_default_output_dir())
    _add_common(p)
    p.set_defaults(func=_cmd_lan_check)

    p = sub.add_parser("intraday",
                       help="intraday price pipeline: per-day boundary tests")
    p.add_argument("--input", type=str, required=True, help="bar CSV")
    p.add_argument("--out-dir", type=str, default=_default_output_dir())
    p.add_argument("--timestamp-column", type=str, default="timestamp")
    p.add_argument("--price-column", type=str, default="price")
    p.add_argument("--delimiter", type=str, default=",")
    p.add_argument("--session-start", type=_session_time, default=time(7, 30),
                   help="session start HH:MM")
    p.add_argument("--session-end", type=_session_time, default=time(13, 59),
                   help="session end HH:MM (inclusive)")
    p.add_argument("--rolling-window", type=int, default=60)
    _add_common(p)
    p.set_defaults(func=_cmd_intraday)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_help(sys.stderr)
            return 1
        if getattr(args, "config", None):
            sub_argv = argv[1:]
            for action in parser._subparsers._group_actions:
                if isinstance(action, argparse._SubParsersAction):
                    sub_parser = action.choices[args.command]
                    _apply_config(sub_parser, args, args.config, sub_argv)
                    break
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
