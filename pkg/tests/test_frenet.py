"""Cartesian <-> Frenet state conversions."""

from __future__ import annotations

import math

import numpy as np
import pytest

from localplan.frenet import (
    ConversionError,
    FrenetState,
    cartesian_to_frenet,
    frenet_to_cartesian,
    frenet_to_cartesian_arrays,
    wrap_vec,
)
from localplan.se2 import Pose2

from conftest import arc_reference, straight_reference


def random_states(rng, n, ref, kappa=0.02):
    """Frenet states with |d * kappa| <= 0.5 and driving-range dynamics."""
    margin = 10.0
    return [
        FrenetState(
            s=rng.uniform(margin, ref.length - margin),
            s_dot=rng.uniform(0.5, 25.0),
            s_ddot=rng.uniform(-3.0, 3.0),
            d=rng.uniform(-0.5, 0.5) / kappa,
            d_dot=rng.uniform(-2.0, 2.0),
            d_ddot=rng.uniform(-2.0, 2.0),
        )
        for _ in range(n)
    ]


def assert_state_close(a: FrenetState, b: FrenetState, tol: float):
    for name, va, vb in zip(
        ("s", "s_dot", "s_ddot", "d", "d_dot", "d_ddot"),
        a.as_tuple(), b.as_tuple(),
    ):
        assert va == pytest.approx(vb, abs=tol), name


def test_round_trip_on_curved_reference():
    radius = 50.0
    ref = arc_reference(radius=radius, sweep=2.0)
    rng = np.random.default_rng(29)
    for state in random_states(rng, 100, ref, kappa=1.0 / radius):
        pose, v, a, curv = frenet_to_cartesian(state, ref)
        back = cartesian_to_frenet(pose, v, a, ref, curvature=curv)
        assert_state_close(state, back, tol=1e-6)


def test_round_trip_straight_reference():
    ref = straight_reference()
    rng = np.random.default_rng(31)
    for state in random_states(rng, 50, ref, kappa=1.0 / 100.0):
        pose, v, a, curv = frenet_to_cartesian(state, ref)
        back = cartesian_to_frenet(pose, v, a, ref, curvature=curv)
        assert_state_close(state, back, tol=1e-6)


def test_straight_line_hand_case():
    ref = straight_reference()
    # heading 30 degrees above the line at speed 10: s_dot = v cos,
    # d_dot = v sin
    pose = Pose2(40.0, 2.0, math.radians(30.0))
    fs = cartesian_to_frenet(pose, 10.0, 0.0, ref)
    assert fs.s == pytest.approx(40.0, abs=1e-6)
    assert fs.d == pytest.approx(2.0, abs=1e-9)
    assert fs.s_dot == pytest.approx(10.0 * math.cos(math.radians(30.0)), rel=1e-9)
    assert fs.d_dot == pytest.approx(10.0 * math.sin(math.radians(30.0)), rel=1e-9)


def test_arc_center_side_speed_scaling():
    # on a left-curving arc, an inside offset (d > 0) shortens the path:
    # s_dot = v / (1 - d kappa) exceeds v
    radius = 50.0
    ref = arc_reference(radius=radius)
    q = ref.offset_point(30.0, 5.0)
    heading = float(ref.heading_at(30.0))
    fs = cartesian_to_frenet(Pose2(float(q[0]), float(q[1]), heading), 10.0, 0.0, ref)
    assert fs.s_dot == pytest.approx(10.0 / (1.0 - 5.0 / radius), rel=1e-4)
    assert fs.d_dot == pytest.approx(0.0, abs=1e-9)


def test_rejects_singularity_at_curvature_center():
    ref = arc_reference(radius=20.0, sweep=2.5)
    # lateral offset exactly at the local curvature centre
    d_center = 1.0 / float(ref.curvature_at(20.0))
    state = FrenetState(s=20.0, s_dot=5.0, s_ddot=0.0,
                        d=d_center, d_dot=0.0, d_ddot=0.0)
    with pytest.raises(ConversionError):
        frenet_to_cartesian(state, ref)


def test_rejects_state_off_reference_domain():
    ref = straight_reference(length=50.0)
    with pytest.raises(ConversionError):
        cartesian_to_frenet(Pose2(60.0, 0.0, 0.0), 5.0, 0.0, ref)
    with pytest.raises(ConversionError):
        frenet_to_cartesian_arrays(
            np.array([55.0]), np.array([1.0]), np.array([0.0]),
            np.array([0.0]), np.array([0.0]), np.array([0.0]), ref,
        )


def test_rejects_perpendicular_heading():
    ref = straight_reference()
    with pytest.raises(ConversionError):
        cartesian_to_frenet(Pose2(10.0, 0.0, math.pi / 2.0), 1.0, 0.0, ref)


def test_arrays_match_scalar_conversion():
    ref = arc_reference(radius=60.0)
    rng = np.random.default_rng(37)
    states = random_states(rng, 20, ref, kappa=1.0 / 60.0)
    cols = {k: np.array([getattr(st, k) for st in states])
            for k in ("s", "s_dot", "s_ddot", "d", "d_dot", "d_ddot")}
    arrs = frenet_to_cartesian_arrays(
        cols["s"], cols["s_dot"], cols["s_ddot"],
        cols["d"], cols["d_dot"], cols["d_ddot"], ref,
    )
    for i, st in enumerate(states):
        pose, v, a, curv = frenet_to_cartesian(st, ref)
        assert arrs["x"][i] == pytest.approx(pose.x, abs=1e-12)
        assert arrs["y"][i] == pytest.approx(pose.y, abs=1e-12)
        assert arrs["theta"][i] == pytest.approx(pose.theta, abs=1e-12)
        assert arrs["v"][i] == pytest.approx(v, abs=1e-12)
        assert arrs["a"][i] == pytest.approx(a, abs=1e-12)
        assert arrs["curvature"][i] == pytest.approx(curv, abs=1e-12)


def test_stationary_state_degenerates_to_reference_alignment():
    ref = straight_reference()
    state = FrenetState(s=30.0, s_dot=0.0, s_ddot=0.0, d=1.2, d_dot=0.0, d_ddot=0.0)
    pose, v, a, curv = frenet_to_cartesian(state, ref)
    assert pose.theta == pytest.approx(0.0, abs=1e-12)
    assert v == pytest.approx(0.0, abs=1e-12)
    assert pose.y == pytest.approx(1.2, abs=1e-12)


def test_crawl_speed_keeps_outputs_bounded():
    # at a crawl, the velocity direction carries no heading information;
    # the conversion must stay finite and modest instead of blowing up the
    # tangent as s_dot -> 0
    ref = straight_reference()
    state = FrenetState(s=30.0, s_dot=0.02, s_ddot=0.0,
                        d=0.5, d_dot=0.05, d_ddot=0.0)
    pose, v, a, curv = frenet_to_cartesian(state, ref)
    assert abs(pose.theta) < math.pi / 4.0
    assert abs(v) < 1.0
    assert math.isfinite(curv) and math.isfinite(a)


def test_reverse_crawl_keeps_speed_sign():
    ref = straight_reference()
    state = FrenetState(s=30.0, s_dot=-0.05, s_ddot=0.0,
                        d=0.0, d_dot=0.0, d_ddot=0.0)
    pose, v, a, curv = frenet_to_cartesian(state, ref)
    assert v == pytest.approx(-0.05, abs=1e-9)
    assert abs(pose.theta) < 1e-9


def test_wrap_vec_range():
    vals = np.array([0.0, math.pi, -math.pi, 3.0 * math.pi, -2.5 * math.pi])
    out = wrap_vec(vals)
    assert np.all(out > -math.pi) and np.all(out <= math.pi)
    np.testing.assert_allclose(np.sin(out), np.sin(vals), atol=1e-12)
    np.testing.assert_allclose(np.cos(out), np.cos(vals), atol=1e-12)
