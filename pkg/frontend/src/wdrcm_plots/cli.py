"""Figure rendering command: ``wdrcm-plot --kind <kind> --in <csv> --out <img>``.

Exit codes: 0 on success, 2 on unknown kind, schema mismatch, or unreadable
input.  Vector (svg, pdf) and raster (png) outputs are selected by the output
file extension.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdrcm-plot",
        description="Render figures from wdrcm experiment CSV outputs")
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="figure kind")
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="input CSV path")
    parser.add_argument("--out", dest="output_image", required=True,
                        help="output image path (.png, .svg, or .pdf)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(input_csv=args.input_csv, kind=args.kind,
                      output_image=args.output_image)
    try:
        info = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output_image} ({info['elements']} elements)")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
