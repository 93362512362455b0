"""mcsplots: render curve figures and timeline strips from result artifacts."""

from __future__ import annotations

import argparse
import glob
import sys

from .curves import CurveSpec, render_curves
from .data import SchemaError
from .timeline import render_timeline


def _expand(patterns: list[str]) -> list[str]:
    paths: list[str] = []
    for pattern in patterns:
        hits = sorted(glob.glob(pattern))
        if not hits:
            raise SchemaError(f"no files match {pattern!r}")
        paths.extend(hits)
    return paths


def _run_curves(args: argparse.Namespace) -> int:
    spec = CurveSpec(
        csv_paths=tuple(_expand(args.csv)),
        log_x=not args.linear_x,
        grid_mode=args.grid,
    )
    rendered = render_curves(spec, args.out_dir, fmt="png" if args.png else "svg")
    for fig in rendered:
        points = sum(fig.points_per_source.values())
        print(f"{fig.path} ({points} points)")
    return 0


def _run_timeline(args: argparse.Namespace) -> int:
    summary = render_timeline(args.trace, args.output)
    print(f"{summary.path} ({summary.blocks_drawn} blocks, "
          f"{len(summary.processes)} processes)")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcsplots",
        description="Figures from throughput CSVs and simulator traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("curves", help="throughput-vs-P small multiples")
    sp.add_argument("--csv", action="append", required=True,
                    help="input CSV path or glob (repeatable)")
    sp.add_argument("--out-dir", default=".", help="directory for the figures")
    sp.add_argument("--grid", action="store_true",
                    help="single figure with one subplot per (n, c) group")
    sp.add_argument("--png", action="store_true", help="raster output instead of SVG")
    sp.add_argument("--linear-x", action="store_true", help="disable the log x axis")
    sp.set_defaults(func=_run_curves)

    sp = sub.add_parser("timeline", help="per-process strip chart from a trace")
    sp.add_argument("trace", help="trace file from a simulation run")
    sp.add_argument("-o", "--output", default="timeline.svg")
    sp.set_defaults(func=_run_timeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
