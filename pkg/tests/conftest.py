"""Shared fixtures: scenario paths and reference-line builders."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from localplan.reference_line import ReferenceLine


SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "localplan" / "scenarios"


@pytest.fixture(scope="session")
def traffic_scenario_path() -> str:
    return str(SCENARIO_DIR / "traffic.yaml")


@pytest.fixture(scope="session")
def stop_scenario_path() -> str:
    return str(SCENARIO_DIR / "stop.yaml")


def straight_reference(length: float = 200.0, spacing: float = 1.0) -> ReferenceLine:
    """Reference line along +x starting at the origin."""
    n = int(round(length / spacing)) + 1
    xs = np.linspace(0.0, length, n)
    pts = np.column_stack([xs, np.zeros_like(xs)])
    return ReferenceLine(pts)


def arc_reference(radius: float = 50.0, sweep: float = 2.0,
                  spacing: float = 0.5) -> ReferenceLine:
    """Counter-clockwise circular arc of given radius starting at the origin,
    initially heading along +x (circle center at (0, radius))."""
    n = max(int(round(radius * sweep / spacing)) + 1, 8)
    phi = np.linspace(-np.pi / 2.0, -np.pi / 2.0 + sweep, n)
    pts = np.column_stack([radius * np.cos(phi), radius + radius * np.sin(phi)])
    return ReferenceLine(pts)


@pytest.fixture(scope="session")
def straight_ref() -> ReferenceLine:
    return straight_reference()


@pytest.fixture(scope="session")
def arc_ref() -> ReferenceLine:
    return arc_reference()
