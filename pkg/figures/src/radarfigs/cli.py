"""Command line for rendering campaign figures."""
from __future__ import annotations

import argparse
import sys

from .inputs import InputError
from .render import KINDS, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="radarfigs")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--input", required=True,
                        help="campaign output directory")
    parser.add_argument("--out", required=True, help="image file to write")
    parser.add_argument("--step", type=int, default=0,
                        help="snapshot step index")
    parser.add_argument("--trial", type=int, default=0,
                        help="snapshot trial index")
    parser.add_argument("--mesh", type=int, default=60,
                        help="heatmap mesh size per axis")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0

    try:
        spec = FigureSpec(input_dir=args.input, kind=args.kind,
                          step=args.step, trial=args.trial,
                          mesh_size=args.mesh)
        render(spec, args.out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
