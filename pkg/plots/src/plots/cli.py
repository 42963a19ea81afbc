"""Render experiment exports to PNG: plots cdf|spatial|chart --in <dir>... --out <file>."""

import argparse
import sys

from .figures import plot_cdf, plot_chart, plot_spatial
from .io import ExportError


def parse_colors(pairs):
    colors = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ExportError(f"bad --color {pair!r}, expected VARIANT=COLOR")
        variant, color = pair.split("=", 1)
        colors[variant] = color
    return colors


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plots", description="figures from chartbeam report exports")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, nargs in (("cdf", "+"), ("spatial", 1), ("chart", 1)):
        p = sub.add_parser(kind)
        p.add_argument("--in", dest="inputs", nargs="+" if nargs == "+" else 1,
                       required=True, help="report director(ies)")
        p.add_argument("--out", required=True, help="output image path")
        if kind == "cdf":
            p.add_argument("--color", action="append",
                           help="per-variant color, e.g. V2=tab:orange")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "cdf":
            fig = plot_cdf(args.inputs, colors=parse_colors(getattr(args, "color", None)))
        elif args.kind == "spatial":
            fig = plot_spatial(args.inputs[0])
        else:
            fig = plot_chart(args.inputs[0])
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
