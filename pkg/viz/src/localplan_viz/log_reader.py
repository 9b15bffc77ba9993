"""Reading and slicing ``localplan-log/1`` JSON Lines files.

Logs may be plain ``.jsonl`` or gzip-compressed ``.jsonl.gz``. A file is a
header record, then frame (or toy-step) records, then a summary record; see
the planner package's ``docs/log_schema.md`` for the field inventory.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass
from typing import Optional

SUPPORTED_SCHEMAS = ("localplan-log/1",)


class LogFormatError(Exception):
    """The file is not a supported frame log."""


class EmptyFrameRangeError(Exception):
    """A frame selection matched no frames."""


@dataclass(frozen=True)
class FrameLog:
    """A parsed log: header dict, frame records in order, summary dict."""

    path: str
    header: dict
    frames: list
    summary: Optional[dict]

    @property
    def kind(self) -> str:
        return self.header.get("kind", "scenario")

    @property
    def replan_hz(self) -> float:
        return float(self.header["run"]["replan_hz"])


def _open_text(path: str):
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def read_log(path: str) -> FrameLog:
    """Parse a log file, validating the schema version.

    Raises ``LogFormatError`` for files that are not JSON Lines, do not start
    with a header record, or declare an unsupported schema.
    """
    records = []
    try:
        with _open_text(path) as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise LogFormatError(f"{path}: line {i + 1} is not JSON: {exc}")
    except (OSError, gzip.BadGzipFile) as exc:
        raise LogFormatError(f"cannot read log {path}: {exc}")

    if not records or records[0].get("record") != "header":
        raise LogFormatError(f"{path}: first record is not a log header")
    header = records[0]
    schema = header.get("schema")
    if schema not in SUPPORTED_SCHEMAS:
        raise LogFormatError(
            f"{path}: unsupported log schema {schema!r} "
            f"(supported: {', '.join(SUPPORTED_SCHEMAS)})"
        )

    frames = [r for r in records[1:] if r.get("record") == "frame"]
    summaries = [r for r in records[1:] if r.get("record") == "summary"]
    return FrameLog(
        path=path,
        header=header,
        frames=frames,
        summary=summaries[-1] if summaries else None,
    )


def parse_frame_range(spec: Optional[str]) -> tuple[Optional[int], Optional[int]]:
    """Parse an ``A:B`` frame selection into slice bounds.

    Either side may be empty (``:B``, ``A:``, ``:``); negative indices count
    from the end as in list slicing. ``None`` selects everything.
    """
    if spec is None or spec.strip() == ":" or spec.strip() == "":
        return None, None
    parts = spec.split(":")
    if len(parts) != 2:
        raise ValueError(f"frame selection must look like A:B, got {spec!r}")
    try:
        lo = int(parts[0]) if parts[0] else None
        hi = int(parts[1]) if parts[1] else None
    except ValueError:
        raise ValueError(f"frame selection bounds must be integers, got {spec!r}")
    return lo, hi


def select_frames(log: FrameLog, spec: Optional[str]) -> list:
    """Return the frames matched by an ``A:B`` selection.

    Raises ``EmptyFrameRangeError`` when nothing matches — for a log with no
    frame records at all (e.g. a toy-orbit log) as well as for an out-of-range
    or inverted selection.
    """
    lo, hi = parse_frame_range(spec)
    chosen = log.frames[slice(lo, hi)]
    if not chosen:
        n = len(log.frames)
        raise EmptyFrameRangeError(
            f"frame selection {spec or ':'} matches no frames "
            f"(log has {n} frame records)"
        )
    return chosen
