"""CLI: plots <figure-kind> --in <csv> --out <img> [--snapshots t1,t2,...]"""
from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, plot


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from solver CSV output",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="input CSV (documented harness schema)")
    parser.add_argument("--out", dest="output_image", required=True,
                        help="output image path")
    parser.add_argument("--snapshots", default=None,
                        help="comma-separated snapshot times to include")
    args = parser.parse_args(argv)

    snapshot_filter = None
    if args.snapshots:
        snapshot_filter = tuple(float(x) for x in args.snapshots.split(","))
    spec = FigureSpec(input_csv=args.input_csv, kind=args.kind,
                      output_image=args.output_image,
                      snapshot_filter=snapshot_filter)
    try:
        sidecar = plot(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output_image} and {sidecar}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
