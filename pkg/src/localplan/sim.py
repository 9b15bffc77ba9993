"""Ground-truth world: lanes, obstacles, execution, perception, safety checks.

The world lives in a global frame the planner never sees. Perception hands
the planner a noise-free snapshot already expressed in the ego's true local
frame; the only corrupted channel in the whole pipeline is the motion
measurement stream (speed / yaw rate) used for dead reckoning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .collision import BoxFootprint, box_corners, obb_overlap
from .loop import PlannerConfig
from .motion import (
    PoseDelta,
    SensorErrorModel,
    constant_twist_step,
    twist_from_delta,
)
from .planner import ObstaclePrediction
from .reference_line import ReferenceLine
from .se2 import (
    IDENTITY,
    TRAJECTORY_DT,
    LocalTrajectory,
    Pose2,
    compose,
    interpolate_state,
    invert,
    relative,
    wrap_angle,
)


class SimulationFault(RuntimeError):
    """Execution cannot proceed (e.g. the selected plan ends too early)."""


@dataclass(frozen=True)
class LaneSpec:
    width: float
    centerline: np.ndarray  # (N, 2) global
    ref: ReferenceLine


@dataclass(frozen=True)
class ObstacleSpec:
    box: BoxFootprint
    lane: int
    s0: float
    speed: float
    behavior: str  # "cruise" | "stopped"


@dataclass(frozen=True)
class StopTargetSpec:
    lane: int
    s: float


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    v_ref: float
    route_lane: int
    lanes: tuple[LaneSpec, ...]
    ego_lane: int
    ego_s0: float
    ego_v0: float
    ego_box: BoxFootprint
    obstacles: tuple[ObstacleSpec, ...]
    stop: Optional[StopTargetSpec]
    sensors: SensorErrorModel
    sensor_hz: int
    planner: PlannerConfig

    def __post_init__(self) -> None:
        if not self.lanes:
            raise ValueError("scenario needs at least one lane")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if not (0 <= self.route_lane < len(self.lanes)):
            raise ValueError("route_lane out of range")
        if not (0 <= self.ego_lane < len(self.lanes)):
            raise ValueError("ego lane out of range")
        if self.ego_box.width > self.lanes[self.ego_lane].width:
            raise ValueError("ego does not fit inside its initial lane")
        if self.sensor_hz < 1:
            raise ValueError("sensor_hz must be >= 1")

    def lane_pose(self, lane: int, s: float) -> Pose2:
        ref = self.lanes[lane].ref
        x, y = ref.point_at(s)
        return Pose2(float(x), float(y), float(ref.heading_at(s)))

    def stop_pose(self) -> Optional[Pose2]:
        if self.stop is None:
            return None
        return self.lane_pose(self.stop.lane, self.stop.s)


@dataclass(frozen=True)
class ObstacleState:
    pose: Pose2
    v: float
    s: float


@dataclass(frozen=True)
class WorldState:
    t: float
    k: int
    ego_pose: Pose2
    ego_v: float
    ego_a: float
    obstacles: tuple[ObstacleState, ...]


@dataclass(frozen=True)
class PerceivedObstacle:
    index: int
    box: BoxFootprint
    pose: Pose2
    v: float
    prediction: ObstaclePrediction  # box inflated for planning


@dataclass(frozen=True)
class PerceptionSnapshot:
    ref_points: np.ndarray
    lane_offsets: tuple[float, ...]
    lane_bounds: tuple[tuple[float, float], ...]
    obstacles: tuple[PerceivedObstacle, ...]
    stop_point: Optional[tuple[float, float]]
    v_ref: float
    route_lane: int
    ego_route_s: float

    @property
    def predictions(self) -> tuple[ObstaclePrediction, ...]:
        return tuple(o.prediction for o in self.obstacles)


RANGE_BEHIND = 20.0
RANGE_AHEAD = 100.0
_REF_BEHIND = 20.0
_REF_AHEAD = 110.0
_REF_SPACING = 5.0


def init_world(sc: Scenario) -> WorldState:
    obstacles = tuple(
        ObstacleState(
            pose=sc.lane_pose(o.lane, o.s0),
            v=o.speed if o.behavior == "cruise" else 0.0,
            s=o.s0,
        )
        for o in sc.obstacles
    )
    return WorldState(
        t=0.0,
        k=0,
        ego_pose=sc.lane_pose(sc.ego_lane, sc.ego_s0),
        ego_v=sc.ego_v0,
        ego_a=0.0,
        obstacles=obstacles,
    )


def step_world(
    world: WorldState,
    selected: LocalTrajectory,
    sc: Scenario,
    dt_replan: float,
    executed_end: Optional[Pose2] = None,
) -> WorldState:
    """Advance one replanning period.

    The trajectory is tracked in the frame it was planned in, which is
    anchored at the ego's current true pose. ``executed_end`` is the pose the
    executed twist chain actually reaches over the period (see
    ``executed_tick_twists``); the new global pose is the current one
    composed with it. Without it the plan's period-end state is used
    directly, which assumes the plan is followable by the vehicle.
    """
    t_next = (world.k + 1) * dt_replan
    if not selected.covers(t_next):
        raise SimulationFault(
            f"selected trajectory ends at {selected.t_end:.2f} s, "
            f"cannot execute through {t_next:.2f} s"
        )
    end = interpolate_state(selected, t_next)
    ego_pose = compose(world.ego_pose, executed_end if executed_end is not None else end.pose)
    obstacles = []
    for spec, st in zip(sc.obstacles, world.obstacles):
        if spec.behavior == "cruise" and spec.speed != 0.0:
            s_new = st.s + spec.speed * dt_replan
            s_new = min(s_new, sc.lanes[spec.lane].ref.length)
            obstacles.append(
                ObstacleState(pose=sc.lane_pose(spec.lane, s_new), v=spec.speed, s=s_new)
            )
        else:
            obstacles.append(st)
    return WorldState(
        t=t_next,
        k=world.k + 1,
        ego_pose=ego_pose,
        ego_v=end.v,
        ego_a=end.a,
        obstacles=tuple(obstacles),
    )


_LANDING_TOL = 1e-11
_LANDING_ITERS = 30
# Correction authority: yaw-rate lobes [rad/s] and speed lobe [m/s]. Far more
# than any normal frame needs; when even this cannot reach the target (e.g. a
# lateral offset at standstill) the landing keeps a tiny residual instead of
# commanding an extreme manoeuvre.
_LANDING_CAPS = np.array([1.0, 1.0, 3.0])
# Steering geometry ties yaw rate to speed: |yaw rate| <= kappa * |v|. In
# particular a stationary vehicle cannot rotate in place, so heading
# corrections lose authority as the chain slows down. Matches the planner's
# curvature limit — the executor is the same vehicle the plans are built for.
_KAPPA_STEER = 0.2


def _steerable(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    cap = _KAPPA_STEER * np.abs(v)
    return np.clip(w, -cap, cap)


def _chain_pose(v: np.ndarray, w: np.ndarray, dt_tick: float) -> Pose2:
    pose = IDENTITY
    for vj, wj in zip(v, w):
        pose = constant_twist_step(pose, float(vj), float(wj), dt_tick)
    return pose


def executed_tick_twists(
    selected: LocalTrajectory, t_k: float, dt_replan: float, sensor_hz: int
) -> tuple[list[tuple[float, float]], Pose2]:
    """Per-sensor-tick (v, yaw rate) of the true motion over one period,
    plus the pose that motion reaches.

    The plan starts at the planner's believed pose, which is generally a few
    centimeters off the true pose (= the frame origin). The vehicle cannot
    teleport onto the plan: it absorbs that offset by actually steering and
    speeding up / slowing down. The executed motion is therefore built in
    twist space — the plan's own per-tick twists plus a smooth one-lobe
    speed correction and a two-lobe yaw-rate correction, solved so that the
    integrated arc chain lands on the plan's period-end pose. Yaw rate is
    clipped to the steering-geometry envelope (``|yaw| <= kappa * |v|``),
    so when the target is not reachable with bounded, steerable correction
    effort (a lateral offset or a heading error at standstill has no
    feasible manoeuvre) the landing keeps a small residual; the returned
    pose is where the chain actually ends, and is what the world advances
    by. The sensors measure these twists, so the entire true motion is
    visible to dead reckoning.
    """
    n = int(round(dt_replan * sensor_hz))
    if n < 1:
        raise ValueError("replanning period shorter than one sensor tick")
    dt_tick = dt_replan / n
    poses = [
        interpolate_state(selected, t_k + j * dt_tick).pose for j in range(n + 1)
    ]
    base = np.array(
        [twist_from_delta(relative(poses[j - 1], poses[j]), dt_tick) for j in range(1, n + 1)]
    )
    target = poses[n]

    u = (np.arange(n) + 0.5) / n
    lobe_v = np.sin(np.pi * u)
    lobe_w1 = np.sin(np.pi * u)
    lobe_w2 = np.sin(2.0 * np.pi * u)

    def residual(p: np.ndarray) -> np.ndarray:
        v = base[:, 0] + p[2] * lobe_v
        w = _steerable(v, base[:, 1] + p[0] * lobe_w1 + p[1] * lobe_w2)
        end = _chain_pose(v, w, dt_tick)
        return np.array(
            [end.x - target.x, end.y - target.y, wrap_angle(end.theta - target.theta)]
        )

    p = np.zeros(3)
    f = residual(p)
    for _ in range(_LANDING_ITERS):
        if np.max(np.abs(f)) < _LANDING_TOL:
            break
        jac = np.empty((3, 3))
        # wide differencing step: at 1e-7 the per-tick cos/sin differences of
        # a near-straight chain cancel below double precision and the lateral
        # sensitivity row reads as exactly zero
        h = 1e-4
        for c in range(3):
            dp = p.copy()
            dp[c] += h
            jac[:, c] = (residual(dp) - f) / h
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        scale = 1.0
        for _ in range(8):
            p_new = np.clip(p + scale * step, -_LANDING_CAPS, _LANDING_CAPS)
            f_new = residual(p_new)
            if np.linalg.norm(f_new) < np.linalg.norm(f):
                p = p_new
                f = f_new
                break
            scale *= 0.5
        else:
            break

    v = base[:, 0] + p[2] * lobe_v
    w = _steerable(v, base[:, 1] + p[0] * lobe_w1 + p[1] * lobe_w2)
    landing = _chain_pose(v, w, dt_tick)
    return [(float(vj), float(wj)) for vj, wj in zip(v, w)], landing


def true_delta(world_prev: WorldState, world_curr: WorldState) -> PoseDelta:
    """Ground-truth inter-frame pose change, in the previous ego frame."""
    return PoseDelta(relative(world_prev.ego_pose, world_curr.ego_pose))


def perceive(world: WorldState, sc: Scenario, horizon_steps: int) -> PerceptionSnapshot:
    """Noise-free snapshot of the scene in the ego's true local frame."""
    ego = world.ego_pose
    inv_ego = invert(ego)
    route = sc.lanes[sc.route_lane].ref
    ego_s, _ = route.project(ego.x, ego.y)
    ego_s = float(ego_s)

    s_lo = max(0.0, ego_s - _REF_BEHIND)
    s_hi = min(route.length, ego_s + _REF_AHEAD)
    n_pts = max(2, int(math.ceil((s_hi - s_lo) / _REF_SPACING)) + 1)
    s_samples = np.linspace(s_lo, s_hi, n_pts)
    pts_global = np.atleast_2d(route.point_at(s_samples))
    ref_points = _to_local_xy(pts_global, ego)

    lane_offsets = []
    lane_bounds = []
    for i, lane in enumerate(sc.lanes):
        if i == sc.route_lane:
            off = 0.0
        else:
            s_i = min(ego_s, lane.ref.length)
            px, py = lane.ref.point_at(s_i)
            _, off = route.project(float(px), float(py))
            off = float(off)
        lane_offsets.append(off)
        lane_bounds.append((off - 0.5 * lane.width, off + 0.5 * lane.width))

    dt = TRAJECTORY_DT
    obstacles = []
    for idx, (spec, st) in enumerate(zip(sc.obstacles, world.obstacles)):
        local_pose = relative(ego, st.pose)
        if not (-RANGE_BEHIND <= local_pose.x <= RANGE_AHEAD):
            continue
        lane_ref = sc.lanes[spec.lane].ref
        if spec.behavior == "cruise" and spec.speed != 0.0:
            s_pred = np.minimum(
                st.s + spec.speed * dt * np.arange(horizon_steps + 1), lane_ref.length
            )
            g_xy = np.atleast_2d(lane_ref.point_at(s_pred))
            g_th = np.asarray(lane_ref.heading_at(s_pred), dtype=float)
        else:
            g_xy = np.tile([st.pose.x, st.pose.y], (horizon_steps + 1, 1))
            g_th = np.full(horizon_steps + 1, st.pose.theta)
        l_xy = _to_local_xy(g_xy, ego)
        l_th = _wrap_arr(g_th - ego.theta)
        pred = ObstaclePrediction(
            box=spec.box.inflated(sc.planner.margin_lon, sc.planner.margin_lat),
            x=l_xy[:, 0],
            y=l_xy[:, 1],
            theta=l_th,
        )
        obstacles.append(
            PerceivedObstacle(index=idx, box=spec.box, pose=local_pose, v=st.v, prediction=pred)
        )

    stop_point = None
    stop_pose = sc.stop_pose()
    if stop_pose is not None:
        local_stop = relative(ego, stop_pose)
        stop_point = (local_stop.x, local_stop.y)

    return PerceptionSnapshot(
        ref_points=ref_points,
        lane_offsets=tuple(lane_offsets),
        lane_bounds=tuple(lane_bounds),
        obstacles=tuple(obstacles),
        stop_point=stop_point,
        v_ref=sc.v_ref,
        route_lane=sc.route_lane,
        ego_route_s=ego_s,
    )


def evaluate_safety(world: WorldState, sc: Scenario) -> tuple[bool, float]:
    """(collision, lane_margin) for the current true world state.

    Collision uses uninflated footprints. The lane margin is the best over
    all lanes of the signed clearance between the ego footprint's lateral
    extent and that lane's bounds; it goes negative exactly when the
    footprint pokes over the bound of every lane (i.e. crosses a line).
    """
    collision = False
    for spec, st in zip(sc.obstacles, world.obstacles):
        if obb_overlap(world.ego_pose, sc.ego_box, st.pose, spec.box):
            collision = True
            break
    corners = box_corners(world.ego_pose.x, world.ego_pose.y, world.ego_pose.theta, sc.ego_box)
    margin = -np.inf
    for lane in sc.lanes:
        _, d = lane.ref.project(corners[:, 0], corners[:, 1])
        half = 0.5 * lane.width
        m = min(half - float(np.max(d)), float(np.min(d)) + half)
        margin = max(margin, m)
    return collision, float(margin)


def footprint_inside_lane(world: WorldState, sc: Scenario, lane_index: int) -> bool:
    """True when all four ego corners lie within the lane's lateral bounds."""
    corners = box_corners(world.ego_pose.x, world.ego_pose.y, world.ego_pose.theta, sc.ego_box)
    lane = sc.lanes[lane_index]
    _, d = lane.ref.project(corners[:, 0], corners[:, 1])
    half = 0.5 * lane.width
    return bool(np.max(d) <= half and np.min(d) >= -half)


def _to_local_xy(points: np.ndarray, frame: Pose2) -> np.ndarray:
    c, s = math.cos(frame.theta), math.sin(frame.theta)
    dx = points[:, 0] - frame.x
    dy = points[:, 1] - frame.y
    return np.column_stack((c * dx + s * dy, -s * dx + c * dy))


def _wrap_arr(theta: np.ndarray) -> np.ndarray:
    out = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)
