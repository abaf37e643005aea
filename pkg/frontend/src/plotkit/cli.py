"""Small front end: `plotkit <kind> input.json [--out base] [--frames N]`."""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import KINDS, FigureSpec, SchemaMismatch


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("inputs", nargs="+")
    parser.add_argument("--out", default="figure")
    parser.add_argument("--frames", type=int, default=None)
    parser.add_argument("--dpi", type=int, default=None)
    args = parser.parse_args(argv)
    style = {}
    if args.frames is not None:
        style["frames"] = args.frames
    if args.dpi is not None:
        style["dpi"] = args.dpi
    try:
        result = render(FigureSpec(inputs=args.inputs, kind=args.kind,
                                   out=args.out, style=style))
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 1
    print(f"{args.kind}: wrote {len(result.files)} file(s)"
          + (f", field dots {result.field_dots}" if result.field_dots else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
