"""Command-line entry point: ``mbcsmooth {smooth,simulate,fixture}``.

Exit status is 0 on success, 2 for bad input (arguments, files, ranges) and
3 when every candidate bandwidth, or the fit itself, is numerically
degenerate, or a study drops too many replicates.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .bandwidth import BandwidthGrid
from .exceptions import AllDegenerateError, DegenerateDesignError, StudyFailedError
from .simulation import (
    SimConfig,
    envelope_data,
    get_function,
    global_study,
    local_reproduction_grids,
    local_study,
)
from .spectra import (
    SmoothJob,
    read_spectrum,
    smooth_spectrum,
    synthetic_spectrum,
    write_cv_table,
    write_results,
    write_spectrum,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

UNITS_NOTE = (
    "Channel numbers are used as the covariate without rescaling, so every "
    "bandwidth (--h, --h0, --h1, --grid) is in channel units."
)


class InputError(Exception):
    pass


def channel_range(text):
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI integers, got {text!r}") from None


def bandwidth_grid(text):
    parts = text.split(":")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) != 3 or count < 1 or (count > 1 and not 0 < lo < hi):
            raise ValueError
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(
            f"expected LO:HI:COUNT with 0 < LO < HI, got {text!r}"
        ) from None
    return BandwidthGrid.logspace(lo, hi, count) if count > 1 else BandwidthGrid([lo])


def offset_value(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbcsmooth",
        description="Local linear and multiplicative bias corrected smoothing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    smooth = sub.add_parser(
        "smooth",
        help="smooth a channel,count spectrum",
        description="Smooth a binned count spectrum. " + UNITS_NOTE,
    )
    smooth.add_argument("--input", required=True, help="CSV with header channel,count")
    smooth.add_argument("--output", required=True, help="result CSV")
    smooth.add_argument("--range", type=channel_range, metavar="LO:HI",
                        help="inclusive channel range (default: all channels)")
    smooth.add_argument("--method", choices=("ll", "mbc", "both"), default="both")
    smooth.add_argument("--h", type=float, help="local linear bandwidth, in channels")
    smooth.add_argument("--h0", type=float, help="pilot bandwidth, in channels")
    smooth.add_argument("--h1", type=float, help="correction bandwidth, in channels")
    smooth.add_argument("--cv", action="store_true",
                        help="choose bandwidths not given explicitly by leave-one-out CV")
    smooth.add_argument("--grid", type=bandwidth_grid, metavar="LO:HI:COUNT",
                        help="log-spaced CV candidates in channels "
                             "(default: 30 from 1 channel spacing to half the range)")
    smooth.add_argument("--ci", type=float, metavar="LEVEL",
                        help="add a pointwise normal band, e.g. 0.95")
    smooth.add_argument("--offset", type=offset_value, default=None,
                        help="constant added to counts before the correction, or 'auto'")
    smooth.add_argument("--emit-cv-table", metavar="PATH",
                        help="write CV scores; PATH gets _ll/_mbc before its extension")

    simulate = sub.add_parser("simulate", help="run a Monte-Carlo study")
    simulate.add_argument("study", choices=("table1", "table2", "figure4"))
    simulate.add_argument("--output", required=True, help="directory for CSV and JSON reports")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--n", type=int, default=100, help="sample size")
    simulate.add_argument("--reps", type=int, help="replications (default 200 for table1, else 100)")
    simulate.add_argument("--functions", default="m1,m2,m3,m4",
                          help="comma-separated test functions for table2")
    simulate.add_argument("--jobs", type=int, default=1, help="parallel workers for table2")

    fixture = sub.add_parser("fixture", help="write a synthetic barium-like spectrum")
    fixture.add_argument("--output", required=True)
    fixture.add_argument("--seed", type=int, default=0)
    fixture.add_argument("--channels", type=int, default=1024)
    return parser


def _cv_path(base, method):
    root, ext = os.path.splitext(base)
    return f"{root}_{method}{ext or '.csv'}"


def run_smooth(args) -> int:
    try:
        spectrum = read_spectrum(args.input)
        job = SmoothJob(
            method=args.method,
            channel_range=args.range,
            h=args.h,
            h0=args.h0,
            h1=args.h1,
            cv=args.cv,
            grid=args.grid,
            ci_level=args.ci,
            offset=args.offset,
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = smooth_spectrum(spectrum, job)
    except (OSError, ValueError) as exc:
        if isinstance(exc, DegenerateDesignError):
            raise
        raise InputError(str(exc)) from exc
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_results(result, args.output)
    if args.emit_cv_table:
        for method, cv in result.cv.items():
            write_cv_table(cv, _cv_path(args.emit_cv_table, method))
    for method, curve in result.curves.items():
        bw = ", ".join(f"{b:.6g}" for b in curve.bandwidths)
        print(f"{method}: bandwidths ({bw}) channels")
    return EXIT_OK


def run_simulate(args) -> int:
    reps = args.reps or (200 if args.study == "table1" else 100)
    try:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        if args.study == "table1":
            cfg = SimConfig(args.n, reps, args.seed, fixed_design=True)
            h_grid, h0_list, h1_grid = local_reproduction_grids()
            report = local_study(get_function("local"), cfg, h_grid, h0_list, h1_grid)
            report.to_csv(out / "table1.csv")
            report.to_json(out / "table1.json")
        elif args.study == "table2":
            cfg = SimConfig(args.n, reps, args.seed)
            functions = [get_function(name.strip()) for name in args.functions.split(",")]
            report = global_study(functions, cfg, n_jobs=args.jobs)
            report.to_csv(out / "table2.csv")
            report.replicates_to_csv(out / "table2_replicates.csv")
            report.to_json(out / "table2.json")
        else:
            cfg = SimConfig(args.n, reps, args.seed)
            table = envelope_data(get_function("m1"), cfg, np.linspace(0.0, 1.0, 101))
            table.to_csv(out / "figure4.csv")
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(str(exc)) from exc
    print(f"wrote {args.study} reports to {out}")
    return EXIT_OK


def run_fixture(args) -> int:
    try:
        write_spectrum(synthetic_spectrum(args.seed, args.channels), args.output)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    return EXIT_OK


COMMANDS = {"smooth": run_smooth, "simulate": run_simulate, "fixture": run_fixture}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AllDegenerateError, DegenerateDesignError, StudyFailedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
