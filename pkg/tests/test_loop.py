"""Planning cycle: start-state extraction, stop engagement, fallbacks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pytest

from localplan.collision import BoxFootprint
from localplan.loop import (
    CoverageError,
    PlannerConfig,
    StartState,
    cold_start,
    extract_start_state,
    nearest_lane,
    plan_frame,
)
from localplan.frenet import FrenetState
from localplan.motion import PoseDelta
from localplan.planner import STOPPING, VELOCITY_KEEPING, ObstaclePrediction
from localplan.polynomials import poly_eval
from localplan.reference_line import ReferenceLine
from localplan.se2 import TRAJECTORY_DT, LocalTrajectory, Pose2, TrajectoryPoint

from conftest import straight_reference


EGO = BoxFootprint(length=4.8, width=1.8)
LANE_CENTERS = [0.0, -3.5]
LANE_BOUNDS = [(-1.75, 1.75), (-5.25, -1.75)]


@dataclass
class FakePerception:
    """Minimal stand-in for the simulator's perception snapshot."""

    lane_offsets: Sequence[float] = (0.0, -3.5)
    lane_bounds: Sequence[tuple[float, float]] = ((-1.75, 1.75), (-5.25, -1.75))
    predictions: Sequence[ObstaclePrediction] = field(default_factory=tuple)
    stop_point: Optional[tuple[float, float]] = None
    v_ref: float = 10.0


@pytest.fixture(scope="module")
def ref():
    return straight_reference(length=400.0)


def centered_reference(behind=50.0, ahead=150.0):
    """Straight reference whose domain starts behind the local origin."""
    xs = np.arange(-behind, ahead + 0.5, 1.0)
    return ReferenceLine(np.column_stack([xs, np.zeros_like(xs)]))


def straight_plan(v=10.0, n=50, frame_id=3):
    """Constant-speed trajectory along +x starting at the local origin."""
    pts = [
        TrajectoryPoint(
            t=j * TRAJECTORY_DT,
            pose=Pose2(v * j * TRAJECTORY_DT, 0.0, 0.0),
            v=v,
            a=0.0,
            curvature=0.0,
        )
        for j in range(n)
    ]
    return LocalTrajectory(frame_id=frame_id, points=pts)


def loop_start(s=50.0, v=10.0, d=0.0, d_dot=0.0):
    fs = FrenetState(s=s, s_dot=v, s_ddot=0.0, d=d, d_dot=d_dot, d_ddot=0.0)
    return StartState(frenet=fs, pose=Pose2(0.0, 0.0, 0.0), v=v, a=0.0, curvature=0.0)


# ---------------------------------------------------------------------------
# configuration and small helpers


def test_planner_config_rejects_bad_values():
    with pytest.raises(ValueError):
        PlannerConfig(comfort_decel=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(horizon=0.01)


@pytest.mark.parametrize(
    "d, expected",
    [(0.0, 0), (0.9, 0), (-1.6, 0), (-1.8, 1), (-3.5, 1), (-6.0, 1)],
)
def test_nearest_lane(d, expected):
    assert nearest_lane(d, LANE_CENTERS) == expected


def test_cold_start_sits_on_reference():
    ref = centered_reference()
    st = cold_start(8.0, ref)
    assert st.cold is True
    assert st.pose.x == st.pose.y == st.pose.theta == 0.0
    assert st.v == 8.0
    assert st.frenet.s == pytest.approx(50.0, abs=1e-6)
    assert st.frenet.d == pytest.approx(0.0, abs=1e-9)
    assert st.frenet.s_dot == pytest.approx(8.0, abs=1e-9)


# ---------------------------------------------------------------------------
# start-state extraction from the previous plan


def test_extract_start_state_tracks_previous_plan_exactly():
    # Vehicle follows the previous plan perfectly for 0.3 s; the estimated
    # delta equals the plan's own pose at t_k, so the reprojected start state
    # must sit at the new local origin with the plan's speed.
    ref = centered_reference()
    prev = straight_plan(v=10.0)
    t_k = 3 * TRAJECTORY_DT
    delta = PoseDelta(Pose2(10.0 * t_k, 0.0, 0.0))
    st = extract_start_state(prev, delta, t_k, ref)
    assert st.cold is False
    assert st.pose.x == pytest.approx(0.0, abs=1e-12)
    assert st.pose.y == pytest.approx(0.0, abs=1e-12)
    assert st.pose.theta == pytest.approx(0.0, abs=1e-12)
    assert st.v == pytest.approx(10.0)
    assert st.frenet.s == pytest.approx(50.0, abs=1e-6)
    assert st.frenet.s_dot == pytest.approx(10.0, abs=1e-6)
    assert st.frenet.d == pytest.approx(0.0, abs=1e-6)


def test_extract_start_state_sees_drift_as_lateral_offset():
    # If the vehicle actually ended up 0.2 m left of where the plan says,
    # the reprojected start state shows up 0.2 m right of the reference
    # (the reference is perceived in the *new* frame, here still centered).
    ref = centered_reference()
    prev = straight_plan(v=10.0)
    t_k = 3 * TRAJECTORY_DT
    delta = PoseDelta(Pose2(10.0 * t_k, 0.2, 0.0))
    st = extract_start_state(prev, delta, t_k, ref)
    assert st.pose.y == pytest.approx(-0.2, abs=1e-12)
    assert st.frenet.d == pytest.approx(-0.2, abs=1e-6)


def test_extract_start_state_requires_coverage():
    ref = centered_reference()
    prev = straight_plan(v=10.0, n=5)  # covers [0, 0.4]
    with pytest.raises(CoverageError):
        extract_start_state(prev, PoseDelta(Pose2(5.0, 0.0, 0.0)), 0.5, ref)
    with pytest.raises(CoverageError):
        extract_start_state(None, PoseDelta(Pose2(0.0, 0.0, 0.0)), 0.0, ref)


# ---------------------------------------------------------------------------
# plan_frame: modes, lane detection, stop engagement


def test_plan_frame_cruise(ref):
    res = plan_frame(FakePerception(), loop_start(), PlannerConfig(), ref, EGO, 0, 0)
    assert res.mode == VELOCITY_KEEPING
    assert res.fallback == "none"
    assert res.stop_s is None
    assert res.current_lane == 0
    assert res.selected.feasible
    assert res.feasible_count > 0
    # the selected candidate holds the cruise speed
    T = res.selected.duration
    assert poly_eval(res.selected.longitudinal_poly, T, 1) == pytest.approx(10.0, abs=1e-9)
    assert res.trajectory.points[0].t == pytest.approx(0.0)


def test_plan_frame_detects_current_lane(ref):
    res = plan_frame(
        FakePerception(), loop_start(d=-3.0), PlannerConfig(), ref, EGO, 0, 0
    )
    assert res.current_lane == 1


def test_plan_frame_requires_lanes(ref):
    with pytest.raises(ValueError):
        plan_frame(
            FakePerception(lane_offsets=()), loop_start(), PlannerConfig(), ref, EGO, 0, 0
        )


def test_plan_frame_fixed_grid_start_index(ref):
    res = plan_frame(
        FakePerception(), loop_start(), PlannerConfig(), ref, EGO, 7, 40
    )
    times = [p.t for p in res.trajectory.points[:3]]
    assert times == pytest.approx([40 * TRAJECTORY_DT, 41 * TRAJECTORY_DT, 42 * TRAJECTORY_DT])


def test_stop_engagement_threshold(ref):
    # v = v_ref = 10, comfort_decel = 2.5:
    # engage distance = 100 / (2 * 0.8 * 2.5) + 0.5 * 10 + 2 = 32 m.
    config = PlannerConfig(comfort_decel=2.5)
    far = plan_frame(
        FakePerception(stop_point=(83.0, 0.0)), loop_start(s=50.0), config, ref, EGO, 0, 0
    )
    assert far.mode == VELOCITY_KEEPING
    assert far.stop_s == pytest.approx(83.0, abs=1e-6)

    near = plan_frame(
        FakePerception(stop_point=(81.0, 0.0)), loop_start(s=50.0), config, ref, EGO, 0, 0
    )
    assert near.mode == STOPPING
    assert near.stop_s == pytest.approx(81.0, abs=1e-6)


def test_stopping_candidates_end_at_rest_at_target(ref):
    config = PlannerConfig(durations=(2.0, 3.0, 4.0, 5.0, 6.0), comfort_decel=2.5)
    res = plan_frame(
        FakePerception(stop_point=(78.0, 0.0)), loop_start(s=50.0), config, ref, EGO, 0, 0
    )
    assert res.mode == STOPPING
    T = res.selected.duration
    assert poly_eval(res.selected.longitudinal_poly, T) == pytest.approx(78.0, abs=1e-6)
    assert poly_eval(res.selected.longitudinal_poly, T, 1) == pytest.approx(0.0, abs=1e-9)


def test_standstill_hold_freezes_lateral_target(ref):
    # Essentially stopped 0.3 m short of the target with a residual 0.8 m
    # offset: the planner must stop chasing the lane center.
    config = PlannerConfig()
    held = plan_frame(
        FakePerception(stop_point=(83.0, 0.0)),
        loop_start(s=82.7, v=0.05, d=0.8),
        config, ref, EGO, 0, 0,
    )
    assert held.mode == STOPPING
    T = held.selected.duration
    assert poly_eval(held.selected.lateral_poly, T) == pytest.approx(0.8, abs=1e-9)

    # Still rolling at 3 m/s from the same spot: the lane center stays the target.
    rolling = plan_frame(
        FakePerception(stop_point=(83.0, 0.0)),
        loop_start(s=79.0, v=3.0, d=0.8),
        config, ref, EGO, 0, 0,
    )
    assert rolling.mode == STOPPING
    T = rolling.selected.duration
    assert poly_eval(rolling.selected.lateral_poly, T) == pytest.approx(0.0, abs=1e-9)


# ---------------------------------------------------------------------------
# fallback ladder


def wall_across_road(ref, s, n_steps):
    """A single obstacle wide enough to block both lanes at station s."""
    q = ref.offset_point(s, -1.75)
    return ObstaclePrediction(
        box=BoxFootprint(length=6.0, width=7.0),
        x=np.full(n_steps, float(q[0])),
        y=np.full(n_steps, float(q[1])),
        theta=np.zeros(n_steps),
    )


def test_plan_frame_falls_back_to_comfort_stop(ref):
    # Both lanes blocked just ahead: every cruising candidate reaches the
    # wall, but a comfortable stop (braking distance 100/(2*2.5) = 20 m) is
    # still dynamically feasible.
    n = int(6.0 / TRAJECTORY_DT) + 1
    perception = FakePerception(predictions=(wall_across_road(ref, 68.0, n),))
    res = plan_frame(perception, loop_start(s=50.0), PlannerConfig(), ref, EGO, 0, 0)
    assert res.fallback == "stop_pool"
    assert res.feasible_count == 0  # counts the main pool only
    T = res.selected.duration
    assert poly_eval(res.selected.longitudinal_poly, T, 1) == pytest.approx(0.0, abs=1e-9)
    assert poly_eval(res.selected.longitudinal_poly, T) <= 71.0


def test_plan_frame_falls_back_to_brake(ref):
    # An absurdly low speed limit makes every sampled candidate infeasible
    # (including the comfort-stop pool, which still starts at 10 m/s); the
    # planner must still return the unconditional braking profile.
    from localplan.planner import Limits

    config = PlannerConfig(limits=Limits(v_max=1.0))
    res = plan_frame(FakePerception(), loop_start(s=50.0), config, ref, EGO, 0, 0)
    assert res.fallback == "brake"
    assert res.selected.mode == "brake"
    assert res.selected.feasible
    assert res.feasible_count == 0
    T = res.selected.duration
    assert poly_eval(res.selected.longitudinal_poly, T, 1) == pytest.approx(0.0, abs=1e-9)
    assert poly_eval(res.selected.lateral_poly, T) == pytest.approx(0.0, abs=1e-9)
