"""SE(2) pose algebra and trajectory reprojection between local vehicle frames.

Conventions
-----------
* A pose is (x, y, theta) with theta in (-pi, pi], positive counter-clockwise.
* ``compose(a, b)`` expresses b (given in a's frame) in a's parent frame.
* Every trajectory is timestamped in absolute simulation seconds and lives in
  exactly one local frame; moving it to the next frame is a rigid transform of
  every pose by the inverse of the frame-to-frame delta.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace

TRAJECTORY_DT = 0.1  # fixed sample step of every planned trajectory [s]

_TIME_EPS = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    r = math.remainder(theta, math.tau)
    if r <= -math.pi:  # IEEE remainder may land exactly on -pi
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose2:
    """Planar rigid pose. The heading is wrapped on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


IDENTITY = Pose2(0.0, 0.0, 0.0)


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Group product: the pose of b (expressed in a) in a's parent frame."""
    ca, sa = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + ca * b.x - sa * b.y,
        a.y + sa * b.x + ca * b.y,
        wrap_angle(a.theta + b.theta),
    )


def invert(p: Pose2) -> Pose2:
    """Inverse pose: compose(invert(p), p) is the identity."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose2(-(c * p.x + s * p.y), s * p.x - c * p.y, wrap_angle(-p.theta))


def relative(a: Pose2, b: Pose2) -> Pose2:
    """b expressed in frame a, so that compose(a, relative(a, b)) == b."""
    return compose(invert(a), b)


@dataclass(frozen=True)
class TrajectoryPoint:
    """One planned state sample.

    Attributes
    ----------
    t : float
        Absolute simulation time [s].
    pose : Pose2
        Pose in the trajectory's local frame.
    v : float
        Signed speed along the heading [m/s]; small negative values are legal
        (slow backward correction near a stop).
    a : float
        Longitudinal acceleration, dv/dt [m/s^2].
    curvature : float
        Path curvature at this point [1/m].
    """

    t: float
    pose: Pose2
    v: float
    a: float
    curvature: float


@dataclass(frozen=True)
class LocalTrajectory:
    """A timestamped state sequence expressed in one local vehicle frame.

    Point times must be strictly increasing; the planner emits them on the
    fixed TRAJECTORY_DT grid so that replanning timestamps land exactly on
    stored samples.
    """

    frame_id: int
    points: tuple[TrajectoryPoint, ...]

    def __post_init__(self) -> None:
        pts = tuple(self.points)
        if not pts:
            raise ValueError("trajectory must contain at least one point")
        object.__setattr__(self, "points", pts)
        times = [p.t for p in pts]
        if any(t1 - t0 <= 0.0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("trajectory point times must be strictly increasing")

    @property
    def t_start(self) -> float:
        return self.points[0].t

    @property
    def t_end(self) -> float:
        return self.points[-1].t

    def covers(self, t: float) -> bool:
        return self.t_start - _TIME_EPS <= t <= self.t_end + _TIME_EPS


def transform_trajectory(traj: LocalTrajectory, delta: Pose2) -> LocalTrajectory:
    """Reproject a trajectory into the next local frame.

    ``delta`` is the new frame's origin expressed in the old frame (the
    frame-to-frame motion), so every pose is pre-multiplied by its inverse.
    Times, speeds, accelerations and curvatures are frame-independent and
    carry over unchanged; the frame id advances by one.
    """
    inv = invert(delta)
    pts = tuple(replace(p, pose=compose(inv, p.pose)) for p in traj.points)
    return LocalTrajectory(frame_id=traj.frame_id + 1, points=pts)


def interpolate_state(traj: LocalTrajectory, t: float) -> TrajectoryPoint:
    """State at time t along a trajectory.

    When t coincides with a stored sample (within 1e-9 s) that sample is
    returned unchanged, so no interpolation error is introduced at exact
    replanning instants. Otherwise position, speed, acceleration and
    curvature are interpolated linearly between the bracketing samples and
    the heading along the shortest arc.
    """
    if not traj.covers(t):
        raise ValueError(
            f"time {t:.6f} outside trajectory span "
            f"[{traj.t_start:.6f}, {traj.t_end:.6f}]"
        )
    times = [p.t for p in traj.points]
    i = bisect.bisect_left(times, t - _TIME_EPS)
    if i < len(times) and abs(times[i] - t) <= _TIME_EPS:
        return traj.points[i]
    lo = traj.points[i - 1]
    hi = traj.points[i]
    u = (t - lo.t) / (hi.t - lo.t)
    pose = Pose2(
        lo.pose.x + u * (hi.pose.x - lo.pose.x),
        lo.pose.y + u * (hi.pose.y - lo.pose.y),
        wrap_angle(lo.pose.theta + u * wrap_angle(hi.pose.theta - lo.pose.theta)),
    )
    return TrajectoryPoint(
        t=t,
        pose=pose,
        v=lo.v + u * (hi.v - lo.v),
        a=lo.a + u * (hi.a - lo.a),
        curvature=lo.curvature + u * (hi.curvature - lo.curvature),
    )


def trajectory_times(n_points: int, start_index: int, dt: float = TRAJECTORY_DT) -> list[float]:
    """Sample times as exact multiples of the base step.

    Building every timestamp as ``(start_index + j) * dt`` keeps replanning
    instants bit-identical across frames (no accumulated float drift).
    """
    return [(start_index + j) * dt for j in range(n_points)]


def pose_log(p: Pose2) -> tuple[float, float, float]:
    """Constant-twist coordinates (vx, vy, omega) with pose_exp as inverse."""
    th = p.theta
    if abs(th) < 1e-12:
        return (p.x + 0.5 * th * p.y, p.y - 0.5 * th * p.x, th)
    a = math.sin(th) / th
    b = (1.0 - math.cos(th)) / th
    den = a * a + b * b
    return ((a * p.x + b * p.y) / den, (-b * p.x + a * p.y) / den, th)


def pose_exp(vx: float, vy: float, omega: float) -> Pose2:
    """Pose reached by following a constant twist for unit time."""
    if abs(omega) < 1e-12:
        return Pose2(vx - 0.5 * omega * vy, vy + 0.5 * omega * vx, omega)
    a = math.sin(omega) / omega
    b = (1.0 - math.cos(omega)) / omega
    return Pose2(a * vx - b * vy, b * vx + a * vy, omega)


def scale_pose(p: Pose2, fraction: float) -> Pose2:
    """Fractional pose along the constant-twist path from identity to p.

    fraction 0 and 1 return the endpoints exactly; intermediate values move
    smoothly along the screw motion connecting them.
    """
    if fraction == 0.0:
        return IDENTITY
    if fraction == 1.0:
        return p
    vx, vy, om = pose_log(p)
    return pose_exp(fraction * vx, fraction * vy, fraction * om)
