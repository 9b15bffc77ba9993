"""Rendering requests: validate, dispatch to a figure builder, save."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import matplotlib.pyplot as plt

from . import figures
from .log_reader import read_log, select_frames

KINDS = ("snapshot", "timeplot", "boxplot", "animation")


@dataclass(frozen=True)
class PlotRequest:
    """One rendering job.

    ``frames`` is an ``A:B`` selection over frame indices with list-slice
    semantics (either side optional, negatives count from the end); ``None``
    selects every frame. A snapshot uses the first selected frame; timeplot
    and boxplot aggregate over the selection; an animation renders one image
    per selected frame.
    """

    log_path: str
    kind: str
    out_path: str
    frames: Optional[str] = None
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"kind must be one of {', '.join(KINDS)}; got {self.kind!r}"
            )
        if self.kind == "animation" and not self.out_path.endswith(".gif"):
            raise ValueError("animation output must be a .gif path")
        if self.dpi < 20:
            raise ValueError("dpi must be at least 20")


def render(req: PlotRequest) -> str:
    """Render one figure (or animation) from a log; returns the output path.

    Raises ``LogFormatError`` for unreadable or unsupported logs and
    ``EmptyFrameRangeError`` when the frame selection matches nothing.
    """
    log = read_log(req.log_path)
    chosen = select_frames(log, req.frames)

    if req.kind == "snapshot":
        fig = figures.build_snapshot(log, chosen[0])
    elif req.kind == "timeplot":
        fig = figures.build_timeplot(log, chosen)
    elif req.kind == "boxplot":
        fig, _ = figures.build_boxplot(log, chosen)
    else:
        figures.save_animation(log, chosen, req.out_path, dpi=req.dpi)
        return req.out_path

    fig.savefig(req.out_path, dpi=req.dpi)
    plt.close(fig)
    return req.out_path
