"""Command-line front end: surface and convergence rendering."""

import argparse
import sys

from .convergence import render_convergence
from .surface import SurfaceCsvError, render_surface


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zeroradius-plots",
        description="Render zeroradius CSV outputs as PNG images.")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("surface", help="norm surface heatmap or 3-d view")
    q.add_argument("csv", help="surface CSV (re,im,norm)")
    q.add_argument("--out", required=True, help="output PNG path")
    q.add_argument("--view", choices=["heatmap", "3d"], default="heatmap")
    q.add_argument("--mark-min", action="store_true",
                   help="annotate the grid argmin")

    q = sub.add_parser("convergence", help="solver convergence trace")
    q.add_argument("csv", help="history CSV (k,F,norm,lambda,mu)")
    q.add_argument("--out", required=True, help="output PNG path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "surface":
            annotation = render_surface(args.csv, args.out, view=args.view,
                                        mark_min=args.mark_min)
            if annotation:
                re, im, v = annotation
                print(f"argmin: re={re!r} im={im!r} norm={v!r}")
        else:
            render_convergence(args.csv, args.out)
    except (SurfaceCsvError, ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
