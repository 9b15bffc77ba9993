"""Frame-to-frame planning cycle.

Each frame: reproject the previous plan by the dead-reckoned pose delta,
read the start state off it at the new planning time, and replan against
the freshly perceived reference line. Everything here works purely in the
current local frame; no global quantity ever enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .collision import BoxFootprint
from .frenet import (
    ConversionError,
    FrenetState,
    cartesian_to_frenet,
    frenet_to_cartesian_arrays,
)
from .motion import PoseDelta
from .planner import (
    STOPPING,
    VELOCITY_KEEPING,
    CandidateTrajectory,
    CostWeights,
    Limits,
    NoFeasibleTrajectory,
    evaluate_cost,
    filter_candidates,
    generate_candidates,
    select_best,
)
from .polynomials import fit_quartic, fit_quintic, poly_eval
from .reference_line import ReferenceLine
from .se2 import (
    TRAJECTORY_DT,
    IDENTITY,
    LocalTrajectory,
    Pose2,
    interpolate_state,
    trajectory_times,
    transform_trajectory,
)


class CoverageError(RuntimeError):
    """Previous trajectory does not cover the requested planning time."""


# Stop-target engagement: brake once the target is within a comfortable
# stopping distance plus a speed headway and a short hold margin; farther
# out the vehicle keeps velocity-keeping, where short-duration candidates
# give lateral correction far more authority per replanning period than the
# long durations a distant fixed-terminal-s profile forces.
_STOP_ENGAGE_DECEL_FRAC = 0.8
_STOP_ENGAGE_HEADWAY_S = 0.5
_STOP_ENGAGE_MARGIN_M = 2.0

# Once essentially stationary at the stop target, lateral repositioning is
# abandoned: at standstill a residual offset has no feasible manoeuvre, and
# chasing it only makes the plans claim heading corrections the vehicle
# cannot deliver. The lateral target collapses to the current offset.
_HOLD_DIST_M = 0.5
_HOLD_SPEED_MPS = 0.2


@dataclass(frozen=True)
class PlannerConfig:
    weights: CostWeights = CostWeights()
    limits: Limits = Limits()
    durations: tuple[float, ...] = (2.0, 3.0, 4.0, 5.0)
    speed_offsets: tuple[float, ...] = (-2.0, 0.0, 2.0)
    margin_lon: float = 1.0
    margin_lat: float = 0.25
    comfort_decel: float = 2.5
    horizon: float = 5.0

    def __post_init__(self) -> None:
        if self.comfort_decel <= 0.0:
            raise ValueError("comfort_decel must be positive")
        if self.horizon < TRAJECTORY_DT:
            raise ValueError("horizon must cover at least one sample step")


@dataclass(frozen=True)
class StartState:
    frenet: FrenetState
    pose: Pose2
    v: float
    a: float
    curvature: float
    cold: bool = False


@dataclass
class PlanResult:
    selected: CandidateTrajectory
    trajectory: LocalTrajectory
    pool: list[CandidateTrajectory]
    generated: int
    feasible_count: int
    fallback: str  # "none" | "stop_pool" | "brake"
    current_lane: int
    mode: str
    stop_s: Optional[float]


def cold_start(v: float, ref: ReferenceLine) -> StartState:
    """Start state at the local origin with the given speed (frame 0 / restart)."""
    fs = cartesian_to_frenet(IDENTITY, v, 0.0, ref, curvature=0.0)
    return StartState(frenet=fs, pose=IDENTITY, v=v, a=0.0, curvature=0.0, cold=True)


def extract_start_state(
    prev: LocalTrajectory,
    est_delta: PoseDelta,
    t_k: float,
    ref: ReferenceLine,
) -> StartState:
    """Planning start state: previous plan, reprojected and read at t_k.

    Raises CoverageError when the previous horizon has run out; the caller
    falls back to cold_start semantics.
    """
    if prev is None or not prev.covers(t_k):
        raise CoverageError(f"previous trajectory does not cover t={t_k:.3f}")
    reproj = transform_trajectory(prev, est_delta.value)
    st = interpolate_state(reproj, t_k)
    fs = cartesian_to_frenet(st.pose, st.v, st.a, ref, curvature=st.curvature)
    return StartState(
        frenet=fs, pose=st.pose, v=st.v, a=st.a, curvature=st.curvature, cold=False
    )


def build_reference(points: np.ndarray) -> ReferenceLine:
    return ReferenceLine(points)


def nearest_lane(d: float, lane_offsets: Sequence[float]) -> int:
    return int(np.argmin([abs(d - off) for off in lane_offsets]))


def plan_frame(
    perception,
    start: StartState,
    config: PlannerConfig,
    ref: ReferenceLine,
    ego_box: BoxFootprint,
    frame_id: int,
    start_index: int,
) -> PlanResult:
    """One replanning step: generate, cost, filter, select — with fallbacks.

    ``perception`` supplies, in the current local frame: ``lane_offsets``
    (lateral offset of each lane center from the reference), ``lane_bounds``
    ((lo, hi) per lane), ``predictions`` (ObstaclePrediction sequence, already
    inflated), ``stop_point`` (local xy or None), and ``v_ref``.
    When the main pool has no feasible candidate the planner first tries a
    comfortable in-lane stop, then an unconditional straight braking profile.
    """
    lane_offsets = list(perception.lane_offsets)
    if not lane_offsets:
        raise ValueError("perception supplied no lanes")
    current_lane = nearest_lane(start.frenet.d, lane_offsets)

    stop_s: Optional[float] = None
    if perception.stop_point is not None:
        sx, sy = perception.stop_point
        s_proj, _ = ref.project(float(sx), float(sy))
        stop_s = float(s_proj)
    mode = VELOCITY_KEEPING
    if stop_s is not None:
        # The envelope speed is floored at v_ref so the engagement distance
        # cannot shrink below the cruise value mid-braking; once inside, the
        # planner stays in stopping mode for the rest of the approach.
        v_env = max(start.frenet.s_dot, perception.v_ref, 0.0)
        engage_dist = (
            v_env * v_env / (2.0 * _STOP_ENGAGE_DECEL_FRAC * config.comfort_decel)
            + _STOP_ENGAGE_HEADWAY_S * v_env
            + _STOP_ENGAGE_MARGIN_M
        )
        if stop_s - start.frenet.s <= engage_dist:
            mode = STOPPING
            if (
                abs(stop_s - start.frenet.s) <= _HOLD_DIST_M
                and abs(start.frenet.s_dot) <= _HOLD_SPEED_MPS
            ):
                lane_offsets[current_lane] = start.frenet.d
    speed_targets = [perception.v_ref + off for off in config.speed_offsets]

    pool = generate_candidates(
        start.frenet,
        lane_offsets,
        speed_targets,
        config.durations,
        mode,
        ref,
        frame_id=frame_id,
        start_index=start_index,
        stop_s=stop_s,
    )
    for cand in pool:
        evaluate_cost(cand, config.weights, perception.v_ref)
    filter_candidates(
        pool,
        list(perception.predictions),
        list(perception.lane_bounds),
        config.limits,
        ego_box,
        current_lane,
    )
    feasible_count = sum(1 for c in pool if c.feasible)
    try:
        best = select_best(pool, current_lane)
        return PlanResult(
            selected=best,
            trajectory=best.points,
            pool=pool,
            generated=len(pool),
            feasible_count=feasible_count,
            fallback="none",
            current_lane=current_lane,
            mode=mode,
            stop_s=stop_s,
        )
    except NoFeasibleTrajectory:
        pass

    fb_pool = _comfort_stop_pool(start, config, ref, current_lane, lane_offsets,
                                 frame_id, start_index)
    for cand in fb_pool:
        evaluate_cost(cand, config.weights, perception.v_ref)
    filter_candidates(fb_pool, [], [], config.limits, ego_box, current_lane)
    try:
        best = select_best(fb_pool, current_lane)
        return PlanResult(
            selected=best,
            trajectory=best.points,
            pool=pool + fb_pool,
            generated=len(pool) + len(fb_pool),
            feasible_count=feasible_count,
            fallback="stop_pool",
            current_lane=current_lane,
            mode=mode,
            stop_s=stop_s,
        )
    except NoFeasibleTrajectory:
        pass

    brake = _brake_candidate(start, config, ref, current_lane, frame_id, start_index)
    evaluate_cost(brake, config.weights, perception.v_ref)
    brake.feasible = True
    return PlanResult(
        selected=brake,
        trajectory=brake.points,
        pool=pool + fb_pool + [brake],
        generated=len(pool) + len(fb_pool) + 1,
        feasible_count=feasible_count,
        fallback="brake",
        current_lane=current_lane,
        mode=mode,
        stop_s=stop_s,
    )


def _comfort_stop_pool(
    start: StartState,
    config: PlannerConfig,
    ref: ReferenceLine,
    current_lane: int,
    lane_offsets: Sequence[float],
    frame_id: int,
    start_index: int,
) -> list[CandidateTrajectory]:
    """Current-lane stopping candidates at comfortable deceleration."""
    sd0 = start.frenet.s_dot
    brake_dist = max(sd0, 0.0) ** 2 / (2.0 * config.comfort_decel)
    stop_s = min(start.frenet.s + brake_dist, ref.length)
    pool = generate_candidates(
        start.frenet,
        [lane_offsets[current_lane]],
        [],
        config.durations,
        STOPPING,
        ref,
        frame_id=frame_id,
        start_index=start_index,
        stop_s=stop_s,
    )
    for cand in pool:
        cand.lane_index = current_lane
    return pool


def _brake_candidate(
    start: StartState,
    config: PlannerConfig,
    ref: ReferenceLine,
    current_lane: int,
    frame_id: int,
    start_index: int,
) -> CandidateTrajectory:
    """Last-resort straight braking profile; never filtered."""
    sd0 = start.frenet.s_dot
    # a quartic ramp from v0 to rest peaks at ~1.875*v0/T deceleration
    T = max(0.5, 1.875 * abs(sd0) / config.limits.a_max)
    n = max(1, int(math.ceil(T / TRAJECTORY_DT - 1e-9)))
    T = n * TRAJECTORY_DT
    lat = fit_quintic(start.frenet.d, start.frenet.d_dot, start.frenet.d_ddot,
                      start.frenet.d, 0.0, 0.0, T)
    lon = fit_quartic(start.frenet.s, sd0, start.frenet.s_ddot, 0.0, 0.0, T)
    cand = CandidateTrajectory(
        lateral_poly=lat,
        longitudinal_poly=lon,
        duration=T,
        lane_index=current_lane,
        mode="brake",
        gen_index=0,
        frame_id=frame_id,
    )
    tau = np.arange(n + 1) * TRAJECTORY_DT
    s = poly_eval(lon, tau)
    s_dot = poly_eval(lon, tau, 1)
    s_ddot = poly_eval(lon, tau, 2)
    d = poly_eval(lat, tau)
    d_dot = poly_eval(lat, tau, 1)
    d_ddot = poly_eval(lat, tau, 2)
    np.clip(s, 0.0, ref.length, out=s)
    try:
        cart = frenet_to_cartesian_arrays(s, s_dot, s_ddot, d, d_dot, d_ddot, ref)
    except ConversionError:
        # residual lateral rate at near-zero speed: give up on arresting it
        # smoothly and just freeze the footprint where it is
        lat = fit_quintic(start.frenet.d, 0.0, 0.0, start.frenet.d, 0.0, 0.0, T)
        lon = fit_quartic(start.frenet.s, 0.0, 0.0, 0.0, 0.0, T)
        cand.lateral_poly, cand.longitudinal_poly = lat, lon
        s = poly_eval(lon, tau)
        s_dot = poly_eval(lon, tau, 1)
        s_ddot = poly_eval(lon, tau, 2)
        d = poly_eval(lat, tau)
        d_dot = poly_eval(lat, tau, 1)
        d_ddot = poly_eval(lat, tau, 2)
        cart = frenet_to_cartesian_arrays(s, s_dot, s_ddot, d, d_dot, d_ddot, ref)
    cand.arrays = {
        "t": np.asarray(trajectory_times(n + 1, start_index)),
        "s": s, "s_dot": s_dot, "s_ddot": s_ddot,
        "d": d, "d_dot": d_dot, "d_ddot": d_ddot,
        "x": cart["x"], "y": cart["y"], "theta": cart["theta"],
        "v": cart["v"], "a": cart["a"], "curvature": cart["curvature"],
    }
    return cand
