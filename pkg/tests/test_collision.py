"""Oriented-box overlap checks."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from localplan.collision import (
    BoxFootprint,
    box_corners,
    first_overlap_index,
    obb_overlap,
    obb_overlap_steps,
)
from localplan.se2 import Pose2


CAR = BoxFootprint(length=4.8, width=1.8)


def test_box_dimensions_validated():
    with pytest.raises(ValueError):
        BoxFootprint(length=0.0, width=1.0)
    with pytest.raises(ValueError):
        BoxFootprint(length=1.0, width=-2.0)


def test_inflated_adds_margin_both_sides():
    grown = CAR.inflated(1.0, 0.25)
    assert grown.length == pytest.approx(4.8 + 2.0)
    assert grown.width == pytest.approx(1.8 + 0.5)


def test_box_corners_axis_aligned():
    corners = box_corners(10.0, 5.0, 0.0, BoxFootprint(4.0, 2.0))
    expected = {(12.0, 6.0), (8.0, 6.0), (8.0, 4.0), (12.0, 4.0)}
    got = {(round(x, 9), round(y, 9)) for x, y in corners}
    assert got == expected


def test_box_corners_rotation():
    corners = box_corners(0.0, 0.0, math.pi / 2.0, BoxFootprint(4.0, 2.0))
    # a quarter turn swaps the roles of length and width
    xs = sorted(round(x, 9) for x, _ in corners)
    ys = sorted(round(y, 9) for _, y in corners)
    assert xs == [-1.0, -1.0, 1.0, 1.0]
    assert ys == [-2.0, -2.0, 2.0, 2.0]


@pytest.mark.parametrize(
    "dx,expected",
    [
        (0.0, True),        # coincident
        (4.7, True),        # overlapping along x
        (4.8, True),        # exactly touching counts
        (4.9, False),       # separated
    ],
)
def test_axis_aligned_separation_along_length(dx, expected):
    a = Pose2(0.0, 0.0, 0.0)
    b = Pose2(dx, 0.0, 0.0)
    assert obb_overlap(a, CAR, b, CAR) is expected


def test_rotated_box_reaches_further():
    # at 45 degrees the half-diagonal exceeds the half-width, so a gap that
    # separates aligned boxes no longer separates the rotated pair
    box = BoxFootprint(4.0, 2.0)
    a = Pose2(0.0, 0.0, 0.0)
    b_aligned = Pose2(0.0, 2.5, 0.0)
    b_rotated = Pose2(0.0, 2.5, math.pi / 4.0)
    assert not obb_overlap(a, box, a := Pose2(0.0, 0.0, 0.0), box) is None
    assert obb_overlap(Pose2(0.0, 0.0, 0.0), box, b_aligned, box) is False
    assert obb_overlap(Pose2(0.0, 0.0, 0.0), box, b_rotated, box) is True


def test_diagonal_near_miss():
    # corner-to-corner diagonal placement: centres further apart than any
    # edge reach, no overlap even though bounding circles intersect
    box = BoxFootprint(2.0, 2.0)
    a = Pose2(0.0, 0.0, 0.0)
    b = Pose2(2.1, 2.1, 0.0)
    assert obb_overlap(a, box, b, box) is False
    assert obb_overlap(a, box, Pose2(1.9, 1.9, 0.0), box) is True


@given(
    st.floats(-10.0, 10.0), st.floats(-10.0, 10.0), st.floats(-math.pi, math.pi),
    st.floats(-10.0, 10.0), st.floats(-10.0, 10.0), st.floats(-math.pi, math.pi),
)
def test_overlap_is_symmetric(xa, ya, ta, xb, yb, tb):
    a, b = Pose2(xa, ya, ta), Pose2(xb, yb, tb)
    box_a, box_b = BoxFootprint(4.0, 2.0), BoxFootprint(3.0, 2.5)
    assert obb_overlap(a, box_a, b, box_b) == obb_overlap(b, box_b, a, box_a)


@given(
    st.floats(-6.0, 6.0), st.floats(-6.0, 6.0), st.floats(-math.pi, math.pi),
)
def test_overlap_agrees_with_corner_containment(xb, yb, tb):
    # sufficient check: if any corner of one box lies inside the other,
    # SAT must report overlap
    box = BoxFootprint(4.0, 2.0)
    a = Pose2(0.0, 0.0, 0.0)
    b = Pose2(xb, yb, tb)
    corners = box_corners(xb, yb, tb, box)
    inside = np.any(
        (np.abs(corners[:, 0]) <= 2.0) & (np.abs(corners[:, 1]) <= 1.0)
    )
    if inside:
        assert obb_overlap(a, box, b, box)


def test_overlap_steps_vectorizes_pairwise():
    n = 50
    xs = np.linspace(0.0, 20.0, n)
    zeros = np.zeros(n)
    hits = obb_overlap_steps(
        xs, zeros, zeros, CAR,
        np.full(n, 10.0), zeros, zeros, CAR,
    )
    for i in range(n):
        single = obb_overlap(Pose2(xs[i], 0.0, 0.0), CAR, Pose2(10.0, 0.0, 0.0), CAR)
        assert hits[i] == single


def test_first_overlap_index_finds_crossing_step():
    n = 40
    t = np.arange(n, dtype=float)
    # ego drives +x at 1 m/step toward a box parked at x = 30
    xa, ya, ta = t, np.zeros(n), np.zeros(n)
    xb, yb, tb = np.full(n, 30.0), np.zeros(n), np.zeros(n)
    idx = first_overlap_index(xa, ya, ta, CAR, xb, yb, tb, CAR)
    # boxes touch when centres are 4.8 apart: first integer step at x = 26
    assert idx == 26
    # reversed direction never meets
    far = np.full(n, 500.0)
    assert first_overlap_index(xa, ya, ta, CAR, far, yb, tb, CAR) == -1
