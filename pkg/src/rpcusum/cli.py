"""Command-line entry points.

Subcommands: detect (change-point test on a CSV matrix), reshape-yearly
(daily series to a years x 365 matrix), simulate (Monte Carlo experiment
from a TOML spec), nulldist (precompute a simulated null law), repeat
(repeated detection with mode aggregation). detect exits 0 when no change
is significant, 2 when one is, and 1 on errors; all commands are
deterministic in --seed and produce byte-identical artifacts on reruns.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ._version import __version__
from .cusum import (
    TrimSpec,
    load_null_distribution,
    null_cache_name,
    resolve_ell,
    save_null_distribution,
    simulate_null,
)
from .detector import (
    DetectorConfig,
    detect,
    detect_repeated,
    location_label,
)
from .harness import (
    ExperimentSpec,
    repetition_csv,
    run_experiment,
    run_repetition_study,
)
from .projection import DataMatrix
from .yearly import read_daily_csv, reshape_yearly, save_yearly


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise CliError(message)


def read_matrix_csv(path: str, header: bool = False) -> DataMatrix:
    """Numeric CSV to DataMatrix; '#' comment lines and blank lines skipped."""
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        skip_header = header
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if skip_header:
                skip_header = False
                continue
            cells = [cell.strip() for cell in line.split(",")]
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ValueError(
                    f"line {lineno}: expected {width} columns, found {len(cells)}"
                )
            parsed = []
            for col, cell in enumerate(cells, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"line {lineno}, column {col}: could not parse {cell!r} "
                        "as a number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"no rows in {path}")
    return DataMatrix(np.asarray(rows))


def _parse_labels(text: str) -> list[int]:
    """Year list: either 'first..last' or comma-separated years."""
    if ".." in text:
        first, last = text.split("..")
        labels = list(range(int(first), int(last) + 1))
        if not labels:
            raise ValueError(f"empty label range: {text!r}")
        return labels
    return [int(cell) for cell in text.split(",")]


def _detector_config(args: argparse.Namespace) -> DetectorConfig:
    return DetectorConfig(
        k=args.k,
        variant="standard" if args.variant == "cusum" else "weighted",
        variance_kind=args.variance,
        trim=TrimSpec.from_token(args.trim),
        method=args.method,
        alpha=args.alpha,
        seed=args.seed,
    )


def _print_config(args: argparse.Namespace, data: DataMatrix) -> None:
    print(f"n={data.n}")
    print(f"p={data.p}")
    print(f"k={args.k}")
    print(f"variant={args.variant}")
    print(f"variance={args.variance}")
    print(f"trim={args.trim}")
    print(f"method={args.method}")
    print(f"alpha={args.alpha!r}")
    print(f"seed={args.seed}")


def cmd_detect(args: argparse.Namespace) -> int:
    data = read_matrix_csv(args.input, header=args.header)
    cfg = _detector_config(args)
    null = load_null_distribution(args.null) if args.null else None
    report = detect(data, cfg, null=null)
    _print_config(args, data)
    sys.stdout.write(report.to_text())
    return 2 if report.significant else 0


def cmd_repeat(args: argparse.Namespace) -> int:
    data = read_matrix_csv(args.input, header=args.header)
    cfg = _detector_config(args)
    null = load_null_distribution(args.null) if args.null else None
    summary = detect_repeated(data, cfg, repetitions=args.reps, null=null)
    labels = _parse_labels(args.labels) if args.labels else None
    if labels is not None and len(labels) != data.n:
        raise CliError(f"{len(labels)} labels for {data.n} rows")
    if args.aggregate == "mode":
        agg = (summary.mode, summary.mode_count)
    else:
        agg = summary.significant_mode()
        if agg is None:
            raise CliError("no significant repetitions to aggregate")
    _print_config(args, data)
    sys.stdout.write(summary.to_text())
    print(f"aggregate={args.aggregate}")
    print(f"aggregate_mode={agg[0]}")
    print(f"aggregate_count={agg[1]}")
    if labels is not None:
        print(f"aggregate_label={location_label(agg[0], labels)}")
    out = args.out or os.path.splitext(args.input)[0] + ".hist.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary.histogram_csv(year_labels=labels))
    print(f"histogram={out}")
    return 0


def cmd_reshape_yearly(args: argparse.Namespace) -> int:
    rows = read_daily_csv(args.input, header=args.header)
    station = args.station or os.path.splitext(os.path.basename(args.input))[0]
    matrix, warnings = reshape_yearly(
        rows, interpolate=args.interpolate, station_id=station
    )
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    save_yearly(matrix, args.output)
    print(f"years={matrix.year_labels[0]}..{matrix.year_labels[-1]}")
    print(f"rows={len(matrix.year_labels)}")
    print(f"output={args.output}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    spec, spec_dict = ExperimentSpec.from_toml(args.spec)
    stem = os.path.splitext(os.path.basename(args.spec))[0]
    os.makedirs(args.out_dir, exist_ok=True)
    table = run_experiment(spec, spec_dict)
    csv_path = os.path.join(args.out_dir, f"{stem}.results.csv")
    json_path = os.path.join(args.out_dir, f"{stem}.results.json")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table.to_csv())
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table.sidecar_json())
    print(f"results={csv_path}")
    print(f"sidecar={json_path}")
    if "repetition" in spec.metrics:
        records = run_repetition_study(
            spec, spec.repetition_datasets, spec.repetition_r
        )
        rep_path = os.path.join(args.out_dir, f"{stem}.repetition.csv")
        with open(rep_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(repetition_csv(records))
        print(f"repetition={rep_path}")
    return 0


def cmd_nulldist(args: argparse.Namespace) -> int:
    variant = "standard" if args.variant == "cusum" else "weighted"
    key = null_cache_name(variant, args.trim, args.reps, args.increments, args.seed)
    null = None
    if os.path.exists(args.output) and not args.force:
        existing = load_null_distribution(args.output)
        existing_key = null_cache_name(
            existing.variant,
            existing.trim_fraction,
            existing.replications,
            existing.increments,
            existing.seed,
        )
        if existing_key != key:
            raise CliError(
                f"{args.output} holds a different null ({existing_key}); "
                "pass --force to overwrite"
            )
        print(f"cache hit: reusing {args.output}")
        null = existing
    if null is None:
        null = simulate_null(variant, args.trim, args.reps, args.increments, args.seed)
        save_null_distribution(null, args.output)
        print(f"wrote {args.output}")
    q90, q95, q99 = (float(null.quantile(q)) for q in (0.90, 0.95, 0.99))
    print(f"q90={q90!r}")
    print(f"q95={q95!r}")
    print(f"q99={q99!r}")
    return 0


def _add_detector_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=int, default=200, help="number of projections")
    sub.add_argument(
        "--variant", choices=("cusum", "weighted"), default="cusum",
        help="test statistic variant",
    )
    sub.add_argument(
        "--variance", choices=("split", "hac"), default="split",
        help="variance estimator",
    )
    sub.add_argument(
        "--trim", choices=("1", "n025", "logn", "sqrtn"), default="1",
        help="trimming rule (weighted variant only; the standard scan is untrimmed)",
    )
    sub.add_argument(
        "--method", choices=("bonf", "bh", "hmp", "cct"), default="bonf",
        help="p-value combination method",
    )
    sub.add_argument("--alpha", type=float, default=0.05, help="significance level")
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument(
        "--header", action="store_true", help="input CSV has a header row"
    )
    sub.add_argument(
        "--null", metavar="FILE", default=None,
        help="null-distribution cache for the weighted variant "
             "(default: simulate one from --seed)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rpcusum", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("detect", help="test a CSV matrix for a mean change")
    p.add_argument("input", help="CSV with n rows and p numeric columns")
    _add_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = subs.add_parser("repeat", help="repeated detection with mode aggregation")
    p.add_argument("input", help="CSV with n rows and p numeric columns")
    _add_detector_flags(p)
    p.add_argument("--reps", type=int, default=100, help="number of repetitions")
    p.add_argument(
        "--aggregate", choices=("mode", "mode-sig"), default="mode",
        help="aggregate over all repetitions or significant ones only",
    )
    p.add_argument(
        "--labels", default=None,
        help="row labels, as first..last or a comma-separated list",
    )
    p.add_argument("--out", default=None, help="histogram CSV path")
    p.set_defaults(func=cmd_repeat)

    p = subs.add_parser(
        "reshape-yearly", help="daily (date,value) CSV to a years x 365 matrix"
    )
    p.add_argument("input", help="daily CSV with date,value rows")
    p.add_argument("output", help="destination matrix CSV")
    p.add_argument("--header", action="store_true", help="input has a header row")
    p.add_argument(
        "--interpolate", action="store_true",
        help="fill missing days linearly instead of excluding the year",
    )
    p.add_argument("--station", default=None, help="station id for the header")
    p.set_defaults(func=cmd_reshape_yearly)

    p = subs.add_parser("simulate", help="run a Monte Carlo experiment spec")
    p.add_argument("spec", help="TOML experiment spec")
    p.add_argument("--out-dir", default=".", help="directory for result files")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("nulldist", help="precompute a simulated null law")
    p.add_argument("output", help="destination cache file")
    p.add_argument(
        "--variant", choices=("cusum", "weighted"), default="cusum",
        help="test statistic variant",
    )
    p.add_argument(
        "--trim", type=float, default=0.0,
        help="trim fraction in [0, 1/2); must be positive for weighted",
    )
    p.add_argument("--reps", type=int, default=100000, help="replications")
    p.add_argument("--increments", type=int, default=10000, help="grid size")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument(
        "--force", action="store_true", help="recompute even if the cache exists"
    )
    p.set_defaults(func=cmd_nulldist)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
