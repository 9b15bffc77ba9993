"""Figure builders for frame logs.

All builders are pure functions of the parsed log: no randomness, no global
state, and every plotted number is taken from the log records (geometry is
drawn from the logged polylines, poses and footprint dimensions).
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.animation import PillowWriter

from .log_reader import FrameLog

GHOST_SPEED_MIN = 0.05  # m/s; slower obstacles get no prediction ghost


# ---------------------------------------------------------------------------
# geometry helpers (route-frame drawing)


def _polyline_offsets(pts: np.ndarray, offset: float) -> np.ndarray:
    """Offset a polyline laterally by ``offset`` along its left normals."""
    d = np.gradient(pts, axis=0)
    n = np.column_stack([-d[:, 1], d[:, 0]])
    n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-12)
    return pts + offset * n


def _arc_pose(pts: np.ndarray, s: float) -> tuple[float, float, float]:
    """Position and heading at arc length ``s`` along a polyline."""
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = float(np.clip(s, 0.0, cum[-1]))
    x = float(np.interp(s, cum, pts[:, 0]))
    y = float(np.interp(s, cum, pts[:, 1]))
    d = np.gradient(pts, axis=0)
    tx = float(np.interp(s, cum, d[:, 0]))
    ty = float(np.interp(s, cum, d[:, 1]))
    return x, y, math.atan2(ty, tx)


def _box_corners(x: float, y: float, theta: float,
                 length: float, width: float) -> np.ndarray:
    half = np.array([
        [length / 2, width / 2],
        [length / 2, -width / 2],
        [-length / 2, -width / 2],
        [-length / 2, width / 2],
    ])
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return half @ rot.T + np.array([x, y])


def _to_route(points_xy, ego: dict) -> np.ndarray:
    """Map planning-frame points into the route frame via the ego pose."""
    pts = np.asarray(points_xy, dtype=float)[:, :2]
    c, s = math.cos(ego["theta"]), math.sin(ego["theta"])
    rot = np.array([[c, -s], [s, c]])
    return pts @ rot.T + np.array([ego["x"], ego["y"]])


def _draw_box(ax, corners: np.ndarray, *, edge: str, fill=None,
              linestyle="-", lw=1.2, zorder=3):
    closed = np.vstack([corners, corners[:1]])
    if fill is not None:
        ax.fill(closed[:, 0], closed[:, 1], color=fill, alpha=0.25,
                zorder=zorder - 0.1, lw=0)
    ax.plot(closed[:, 0], closed[:, 1], color=edge, linestyle=linestyle,
            lw=lw, zorder=zorder)


# ---------------------------------------------------------------------------
# snapshot


def draw_snapshot(ax, log: FrameLog, frame: dict) -> None:
    """Draw one frame's scene onto ``ax`` in the route frame.

    Shows lane boundaries, the ego footprint (solid), obstacle footprints
    (solid) with constant-speed prediction ghosts at the planning horizon
    (dashed), the candidate fan when the frame logged one, and the selected
    trajectory as one dot per 0.1 s sample.
    """
    sc = log.header["scenario"]
    ego = frame["ego"]

    for lane in sc["lanes"]:
        pts = np.asarray(lane["centerline"], dtype=float)
        half = lane["width_m"] / 2.0
        for side in (half, -half):
            edge = _polyline_offsets(pts, side)
            ax.plot(edge[:, 0], edge[:, 1], color="0.55", lw=0.9, zorder=1)
        ax.plot(pts[:, 0], pts[:, 1], color="0.8", lw=0.6,
                linestyle=(0, (2, 6)), zorder=1)

    stop = sc.get("stop")
    if stop:
        ax.plot(stop["pose"]["x"], stop["pose"]["y"], marker="x", color="C3",
                markersize=9, mew=2, zorder=4)

    horizon = log.header["planner"]["horizon_s"]
    for spec, ob in zip(sc["obstacles"], frame["obstacles"]):
        _draw_box(
            ax,
            _box_corners(ob["x"], ob["y"], ob["theta"],
                         spec["length_m"], spec["width_m"]),
            edge="C3", fill="C3",
        )
        if abs(ob["v"]) > GHOST_SPEED_MIN:
            lane_pts = np.asarray(
                sc["lanes"][spec["lane"]]["centerline"], dtype=float
            )
            gx, gy, gth = _arc_pose(lane_pts, ob["s"] + ob["v"] * horizon)
            _draw_box(
                ax,
                _box_corners(gx, gy, gth, spec["length_m"], spec["width_m"]),
                edge="C3", linestyle="--", lw=1.0, zorder=2,
            )

    for cand in frame.get("candidates", []):
        if "xy" not in cand:
            continue
        pts = _to_route(cand["xy"], ego)
        if cand["feasible"]:
            color, alpha, z = f"C{cand['lane'] % 10}", 0.5, 2.5
        else:
            color, alpha, z = "0.85", 0.6, 2.0
        ax.plot(pts[:, 0], pts[:, 1], color=color, alpha=alpha, lw=0.6, zorder=z)

    sel = frame["selected"]
    path = _to_route([p[:2] for p in sel["path"]], ego)
    ax.plot(path[:, 0], path[:, 1], linestyle="none", marker=".",
            color="k", markersize=3.5, zorder=4)

    ego_spec = sc["ego"]
    _draw_box(
        ax,
        _box_corners(ego["x"], ego["y"], ego["theta"],
                     ego_spec["length_m"], ego_spec["width_m"]),
        edge="k", fill="C0", lw=1.5, zorder=5,
    )

    ax.set_xlim(ego["x"] - 25.0, ego["x"] + 85.0)
    ys = []
    for lane in sc["lanes"]:
        pts = np.asarray(lane["centerline"], dtype=float)
        near = pts[np.abs(pts[:, 0] - ego["x"]) < 120.0]
        if near.size:
            ys.extend([near[:, 1].min() - lane["width_m"], near[:, 1].max() + lane["width_m"]])
    if ys:
        ax.set_ylim(min(ys) - 1.0, max(ys) + 1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{sc['name']} — frame {frame['k']}")
    ax.text(
        0.01, 0.04,
        f"t={frame['t']:.1f} s   v={ego['v']:.2f} m/s   "
        f"lane margin={frame['lane_margin']:.2f} m",
        transform=ax.transAxes, fontsize=8, va="bottom",
        bbox=dict(boxstyle="round", fc="white", ec="0.7", alpha=0.8),
    )


def build_snapshot(log: FrameLog, frame: dict):
    fig, ax = plt.subplots(figsize=(13.0, 3.4))
    draw_snapshot(ax, log, frame)
    fig.tight_layout()
    return fig


# ---------------------------------------------------------------------------
# time plot


def _tick_series(frames: list) -> dict:
    t, v_m, v_t, w_m, w_t = [], [], [], [], []
    for f in frames:
        meas = f["meas"]
        if not meas["t"]:
            continue
        t.extend(meas["t"])
        v_m.extend(meas["v"])
        v_t.extend(meas["v_true"])
        w_m.extend(meas["yawrate"])
        w_t.extend(meas["yawrate_true"])
    out = {k: np.asarray(v, dtype=float)
           for k, v in (("t", t), ("v_m", v_m), ("v_t", v_t),
                        ("w_m", w_m), ("w_t", w_t))}
    out["v_err"] = out["v_m"] - out["v_t"]
    out["w_err"] = out["w_m"] - out["w_t"]
    return out


def build_timeplot(log: FrameLog, frames: list):
    """True vs measured speed and yaw rate over time, with error subplots."""
    s = _tick_series(frames)
    fig, axes = plt.subplots(4, 1, figsize=(10.0, 8.0), sharex=True)

    axes[0].plot(s["t"], s["v_m"], color="C1", lw=0.7, alpha=0.8, label="measured")
    axes[0].plot(s["t"], s["v_t"], color="C0", lw=1.4, label="true")
    axes[0].set_ylabel("speed [m/s]")
    axes[0].legend(loc="upper right", fontsize=8)

    axes[1].plot(s["t"], s["v_err"], color="C2", lw=0.7)
    axes[1].axhline(0.0, color="0.6", lw=0.8)
    axes[1].set_ylabel("speed error [m/s]")

    axes[2].plot(s["t"], s["w_m"], color="C1", lw=0.7, alpha=0.8, label="measured")
    axes[2].plot(s["t"], s["w_t"], color="C0", lw=1.4, label="true")
    axes[2].set_ylabel("yaw rate [rad/s]")
    axes[2].legend(loc="upper right", fontsize=8)

    axes[3].plot(s["t"], s["w_err"], color="C2", lw=0.7)
    axes[3].axhline(0.0, color="0.6", lw=0.8)
    axes[3].set_ylabel("yaw-rate error [rad/s]")
    axes[3].set_xlabel("t [s]")

    fig.suptitle(f"{log.header['scenario']['name']} — sensor traces")
    fig.tight_layout()
    return fig


# ---------------------------------------------------------------------------
# box plot


def build_boxplot(log: FrameLog, frames: list):
    """Distributions of per-tick measurement errors and per-frame motion
    estimation errors.

    Returns ``(fig, medians)`` where the medians are read back from the
    rendered box-plot artists (one entry per box).
    """
    s = _tick_series(frames)
    eps = np.array(
        [[f["epsilon"]["dx"], f["epsilon"]["dy"], f["epsilon"]["dtheta"]]
         for f in frames if f["meas"]["t"]],
        dtype=float,
    ).reshape(-1, 3)

    fig, axes = plt.subplots(2, 2, figsize=(9.0, 7.0))
    medians: dict[str, float] = {}

    def box(ax, data, labels, keys, ylabel):
        bp = ax.boxplot(data, tick_labels=labels, showmeans=True)
        ax.axhline(0.0, color="0.7", lw=0.8)
        ax.set_ylabel(ylabel)
        for key, artist in zip(keys, bp["medians"]):
            medians[key] = float(artist.get_ydata()[0])

    box(axes[0, 0], [s["v_err"]], ["speed"], ["v"], "measurement error [m/s]")
    box(axes[0, 1], [s["w_err"]], ["yaw rate"], ["yawrate"],
        "measurement error [rad/s]")
    box(axes[1, 0], [eps[:, 0], eps[:, 1]], ["dx", "dy"],
        ["eps_dx", "eps_dy"], "frame motion error [m]")
    box(axes[1, 1], [eps[:, 2]], ["dtheta"], ["eps_dtheta"],
        "frame motion error [rad]")

    fig.suptitle(
        f"{log.header['scenario']['name']} — error distributions "
        f"({len(eps)} frames)"
    )
    fig.tight_layout()
    return fig, medians


# ---------------------------------------------------------------------------
# animation


def save_animation(log: FrameLog, frames: list, out_path: str,
                   dpi: int = 100) -> int:
    """Write a GIF with one snapshot per selected frame at the replan rate.

    Returns the number of frames written.
    """
    fig = plt.figure(figsize=(13.0, 3.4))
    writer = PillowWriter(fps=max(1, round(log.replan_hz)))
    with writer.saving(fig, out_path, dpi):
        for frame in frames:
            fig.clf()
            ax = fig.add_subplot(111)
            draw_snapshot(ax, log, frame)
            fig.tight_layout()
            writer.grab_frame()
    plt.close(fig)
    return len(frames)
