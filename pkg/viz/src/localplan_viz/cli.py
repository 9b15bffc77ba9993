"""Command-line figure rendering from frame logs.

Example::

    localplan-viz render --log runs/stop_seed0.jsonl --kind snapshot \
        --frames -1: --out stop_final.png
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .log_reader import EmptyFrameRangeError, LogFormatError
from .render import KINDS, PlotRequest, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localplan-viz",
        description="Render figures from localplan frame logs "
                    "(.jsonl or .jsonl.gz).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one figure or animation")
    p.add_argument("--log", required=True, metavar="PATH",
                   help="frame log file (.jsonl or .jsonl.gz)")
    p.add_argument("--kind", required=True, choices=KINDS,
                   help="figure kind")
    p.add_argument("--frames", default=None, metavar="A:B",
                   help="frame selection with slice semantics "
                        "(default: all frames)")
    p.add_argument("--out", required=True, metavar="PATH",
                   help="output image (.png/.pdf/...; .gif for animation)")
    p.add_argument("--dpi", type=int, default=120, metavar="N",
                   help="raster resolution (default 120)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        req = PlotRequest(
            log_path=args.log,
            kind=args.kind,
            out_path=args.out,
            frames=args.frames,
            dpi=args.dpi,
        )
        out = render(req)
    except (LogFormatError, EmptyFrameRangeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
