"""Figure rendering for ``localplan`` frame logs.

Consumes only the public log file schema (``localplan-log/1``); it has no
dependency on the planner package itself. Rendering is read-only and
deterministic: the same log and request always produce the same bytes, and
every number shown in a figure is read from the log.
"""

from .log_reader import (
    EmptyFrameRangeError,
    FrameLog,
    LogFormatError,
    read_log,
    select_frames,
)
from .render import PlotRequest, render

__all__ = [
    "EmptyFrameRangeError",
    "FrameLog",
    "LogFormatError",
    "PlotRequest",
    "read_log",
    "render",
    "select_frames",
]
