"""Batch figure rendering CLI.

    mrisk-figures render --spec fig.toml
    mrisk-figures render --kind risk_curve --in run.csv --out fig.png
"""
from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser():
    parser = argparse.ArgumentParser(prog="mrisk-figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a CSV")
    p.add_argument("--spec", help="TOML file with kind/input_csv/output_image")
    p.add_argument("--kind", choices=FIGURE_KINDS)
    p.add_argument("--in", dest="input_csv")
    p.add_argument("--out", dest="output_image")
    p.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.spec:
            spec = FigureSpec.from_toml(args.spec)
        else:
            if not (args.kind and args.input_csv and args.output_image):
                print("render needs --spec or all of --kind/--in/--out",
                      file=sys.stderr)
                return 1
            spec = FigureSpec(args.kind, args.input_csv, args.output_image,
                              title=args.title)
        path = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
