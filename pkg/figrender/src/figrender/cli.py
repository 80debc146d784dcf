"""Command surface: ssmcfig render --preset fig4 --in <dir> --out <file>
or ssmcfig render --spec <spec.json>."""

from __future__ import annotations

import argparse
import sys

from .render import (EmptyTraceError, FigureSpec, MissingColumnError, PRESETS,
                     render_figure, render_preset)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ssmcfig", description="Render ssmclab CSV exports into figures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--spec", help="JSON figure spec")
    p.add_argument("--preset", choices=PRESETS, help="bundled layout")
    p.add_argument("--in", dest="in_dir",
                   help="run/sweep output directory (preset mode)")
    p.add_argument("--out", help="output image path (preset mode)")
    p.add_argument("--format", default="svg", choices=("svg", "png"))

    args = parser.parse_args(argv)
    try:
        if args.spec:
            out = render_figure(FigureSpec.from_json(args.spec))
        elif args.preset:
            if not (args.in_dir and args.out):
                parser.error("--preset needs --in and --out")
            out = render_preset(args.preset, args.in_dir, args.out,
                                image_format=args.format)
        else:
            parser.error("give either --spec or --preset")
            return 1
    except (MissingColumnError, EmptyTraceError, FileNotFoundError,
            ValueError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
