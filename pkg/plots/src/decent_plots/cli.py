"""Command-line figure renderer for decent experiment tables."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, PlotInputError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decent-plot",
        description="Render a decent experiment CSV to a figure file",
    )
    parser.add_argument("--kind", required=True, choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="csv_path", required=True, help="input CSV table")
    parser.add_argument("--out", dest="out_path", required=True, help="output image path")
    parser.add_argument("--title", help="optional figure title")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        csv_path=Path(args.csv_path),
        out_path=Path(args.out_path),
        title=args.title,
    )
    try:
        out = render(spec)
    except PlotInputError as exc:
        print(f"decent-plot: error: {exc}", file=sys.stderr)
        return 1
    print(f"decent-plot: wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
