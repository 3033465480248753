"""sharpwave-plot --run DIR --kind KIND --out FILE [--batch]"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from sharpwave_plot.figures import KINDS, FigureSpec, MissingArtifact, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sharpwave-plot", description="Render figures from a sharpwave run directory"
    )
    parser.add_argument("--run", required=True, help="artifact directory of one run")
    parser.add_argument("--kind", choices=KINDS + ("all",), required=True)
    parser.add_argument("--out", required=True, help="output image file, or directory with --kind all")
    parser.add_argument("--dpi", type=int, default=130)
    args = parser.parse_args(argv)

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        print(f"run directory not found: {run_dir}", file=sys.stderr)
        return 2
    kinds = KINDS if args.kind == "all" else (args.kind,)
    out = Path(args.out)
    try:
        for kind in kinds:
            target = out / f"{kind}.png" if args.kind == "all" else out
            path = render(FigureSpec(run_dir=run_dir, kind=kind, out=target, style={"dpi": args.dpi}))
            print(f"wrote {path}")
    except MissingArtifact as e:
        print(f"artifact error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
