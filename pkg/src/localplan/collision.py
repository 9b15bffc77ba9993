"""Oriented-box overlap tests for trajectory checking.

Rectangles in 2D are convex, so the separating axis theorem only needs the
four edge normals (two per box). Everything is written to run over whole
arrays of poses at once because the planner checks every candidate point
against every predicted obstacle point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .se2 import Pose2


@dataclass(frozen=True)
class BoxFootprint:
    """Axis-aligned box dimensions attached to a pose at its center."""

    length: float
    width: float

    def __post_init__(self) -> None:
        if self.length <= 0.0 or self.width <= 0.0:
            raise ValueError("box dimensions must be positive")

    def inflated(self, margin_lon: float, margin_lat: float) -> "BoxFootprint":
        return BoxFootprint(
            self.length + 2.0 * margin_lon, self.width + 2.0 * margin_lat
        )


def box_corners(x: float, y: float, theta: float, box: BoxFootprint) -> np.ndarray:
    """Corner coordinates of an oriented box, shape (4, 2), CCW order."""
    hx, hy = 0.5 * box.length, 0.5 * box.width
    local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def obb_overlap(pose_a: Pose2, box_a: BoxFootprint, pose_b: Pose2, box_b: BoxFootprint) -> bool:
    """Exact overlap test for two oriented boxes (touching counts)."""
    res = obb_overlap_steps(
        np.array([pose_a.x]), np.array([pose_a.y]), np.array([pose_a.theta]), box_a,
        np.array([pose_b.x]), np.array([pose_b.y]), np.array([pose_b.theta]), box_b,
    )
    return bool(res[0])


def obb_overlap_steps(
    xa: np.ndarray, ya: np.ndarray, ta: np.ndarray, box_a: BoxFootprint,
    xb: np.ndarray, yb: np.ndarray, tb: np.ndarray, box_b: BoxFootprint,
) -> np.ndarray:
    """Pairwise overlap over aligned pose arrays; returns a bool array.

    A bounding-circle test prunes the common far-apart case before the four
    SAT axis projections run on the survivors.
    """
    xa = np.asarray(xa, dtype=float)
    ya = np.asarray(ya, dtype=float)
    ta = np.asarray(ta, dtype=float)
    xb = np.asarray(xb, dtype=float)
    yb = np.asarray(yb, dtype=float)
    tb = np.asarray(tb, dtype=float)
    n = xa.shape[0]
    out = np.zeros(n, dtype=bool)

    ra = 0.5 * np.hypot(box_a.length, box_a.width)
    rb = 0.5 * np.hypot(box_b.length, box_b.width)
    near = (xa - xb) ** 2 + (ya - yb) ** 2 <= (ra + rb) ** 2
    if not np.any(near):
        return out

    idx = np.nonzero(near)[0]
    dx = xb[idx] - xa[idx]
    dy = yb[idx] - ya[idx]
    ca, sa = np.cos(ta[idx]), np.sin(ta[idx])
    cb, sb = np.cos(tb[idx]), np.sin(tb[idx])
    ha_l, ha_w = 0.5 * box_a.length, 0.5 * box_a.width
    hb_l, hb_w = 0.5 * box_b.length, 0.5 * box_b.width

    overlap = np.ones(idx.shape[0], dtype=bool)
    # axes: a's edge normals then b's, as (ux, uy) component pairs per element
    axes = (
        (ca, sa), (-sa, ca),
        (cb, sb), (-sb, cb),
    )
    for ux, uy in axes:
        center_gap = np.abs(dx * ux + dy * uy)
        reach_a = ha_l * np.abs(ca * ux + sa * uy) + ha_w * np.abs(-sa * ux + ca * uy)
        reach_b = hb_l * np.abs(cb * ux + sb * uy) + hb_w * np.abs(-sb * ux + cb * uy)
        overlap &= center_gap <= reach_a + reach_b
        if not np.any(overlap):
            break
    out[idx] = overlap
    return out


def first_overlap_index(
    xa: np.ndarray, ya: np.ndarray, ta: np.ndarray, box_a: BoxFootprint,
    xb: np.ndarray, yb: np.ndarray, tb: np.ndarray, box_b: BoxFootprint,
) -> int:
    """Index of the first overlapping step, or -1 when the pair never meets."""
    hits = obb_overlap_steps(xa, ya, ta, box_a, xb, yb, tb, box_b)
    where = np.nonzero(hits)[0]
    return int(where[0]) if where.size else -1
