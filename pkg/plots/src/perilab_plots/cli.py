"""Command-line wrapper: perilab-plot <kind> <csv> <out>.

<csv> may be a comma-separated list (the orbit gallery takes several
trajectory files; theta figures may pool several sweep files).  A JSON
sidecar of fitted aggregates (from `perilab sweep-dx --fits-out`) can be
supplied with --fits-json to overlay stored fits instead of refitting.
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perilab-plot",
        description="regenerate figures from perilab sweep CSV files")
    parser.add_argument("kind", choices=sorted(KINDS), help="figure family")
    parser.add_argument("csv", help="input CSV path(s), comma-separated")
    parser.add_argument("out", help="output SVG path")
    parser.add_argument("--fits-json", default=None,
                        help="sidecar JSON with per-dx aggregates / power fit")
    parser.add_argument("--title", default=None, help="figure title override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fits = None
    try:
        if args.fits_json:
            with open(args.fits_json, encoding="utf-8") as f:
                fits = json.load(f)
        spec = FigureSpec(kind=args.kind,
                          inputs=tuple(p for p in args.csv.split(",") if p),
                          output=args.out, fits=fits, title=args.title)
        render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
