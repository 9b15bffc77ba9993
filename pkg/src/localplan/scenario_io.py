"""Scenario configuration files: schema, validation, geometry building.

Scenarios are YAML with explicit units in every field name (``width_m``,
``v_ref_mps``, ``yawrate_offset_dps``, ...). The road centerline is described
compactly as straight/arc pieces from a start pose; each lane is a constant
lateral offset of that centerline, rebuilt into its own arc-length reference.
Angles are degrees in the file and radians everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Any, Optional

import numpy as np
import yaml

from .collision import BoxFootprint
from .loop import PlannerConfig
from .motion import SensorErrorModel
from .planner import CostWeights, Limits
from .reference_line import ReferenceLine
from .sim import LaneSpec, ObstacleSpec, Scenario, StopTargetSpec

DEG = math.pi / 180.0


class ScenarioError(ValueError):
    """Schema or invariant violation; the message names the offending field."""


def _map(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise ScenarioError(f"{path}: expected a mapping")
    return node


def _seq(node: Any, path: str, min_len: int = 0) -> list:
    if not isinstance(node, list):
        raise ScenarioError(f"{path}: expected a list")
    if len(node) < min_len:
        raise ScenarioError(f"{path}: needs at least {min_len} entries")
    return node


def _num(
    d: dict,
    key: str,
    path: str,
    default: Optional[float] = None,
    required: bool = False,
    positive: bool = False,
    nonnegative: bool = False,
) -> float:
    if key not in d:
        if required:
            raise ScenarioError(f"{path}.{key}: missing required field")
        return float(default)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}.{key}: expected a number")
    v = float(v)
    if not math.isfinite(v):
        raise ScenarioError(f"{path}.{key}: must be finite")
    if positive and v <= 0.0:
        raise ScenarioError(f"{path}.{key}: must be > 0")
    if nonnegative and v < 0.0:
        raise ScenarioError(f"{path}.{key}: must be >= 0")
    return v


def _int(d: dict, key: str, path: str, default: Optional[int] = None,
         required: bool = False, minimum: Optional[int] = None) -> int:
    if key not in d:
        if required:
            raise ScenarioError(f"{path}.{key}: missing required field")
        return int(default)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"{path}.{key}: expected an integer")
    if minimum is not None and v < minimum:
        raise ScenarioError(f"{path}.{key}: must be >= {minimum}")
    return v


def _str(d: dict, key: str, path: str, default: Optional[str] = None,
         required: bool = False, choices: Optional[tuple] = None) -> str:
    if key not in d:
        if required:
            raise ScenarioError(f"{path}.{key}: missing required field")
        return default
    v = d[key]
    if not isinstance(v, str):
        raise ScenarioError(f"{path}.{key}: expected a string")
    if choices is not None and v not in choices:
        raise ScenarioError(f"{path}.{key}: must be one of {sorted(choices)}")
    return v


def _build_road_points(road: dict, path: str) -> np.ndarray:
    start = _map(road.get("start", {}), f"{path}.start")
    x = _num(start, "x_m", f"{path}.start", default=0.0)
    y = _num(start, "y_m", f"{path}.start", default=0.0)
    th = _num(start, "heading_deg", f"{path}.start", default=0.0) * DEG
    spacing = _num(road, "sample_spacing_m", path, default=2.0, positive=True)
    pieces = _seq(road.get("pieces"), f"{path}.pieces", min_len=1)

    pts = [(x, y)]
    for i, raw in enumerate(pieces):
        p = _map(raw, f"{path}.pieces[{i}]")
        kind = _str(p, "kind", f"{path}.pieces[{i}]", required=True,
                    choices=("straight", "arc"))
        length = _num(p, "length_m", f"{path}.pieces[{i}]", required=True,
                      positive=True)
        n = max(2, int(math.ceil(length / spacing)))
        if kind == "straight":
            c, s = math.cos(th), math.sin(th)
            for j in range(1, n + 1):
                d = length * j / n
                pts.append((x + c * d, y + s * d))
        else:
            radius = _num(p, "radius_m", f"{path}.pieces[{i}]", required=True)
            if radius == 0.0:
                raise ScenarioError(f"{path}.pieces[{i}].radius_m: must be nonzero")
            kappa = 1.0 / radius
            for j in range(1, n + 1):
                d = length * j / n
                thj = th + kappa * d
                pts.append((x + (math.sin(thj) - math.sin(th)) / kappa,
                            y - (math.cos(thj) - math.cos(th)) / kappa))
            th = th + kappa * length
        x, y = pts[-1]
    return np.asarray(pts, dtype=float)


def _build_lanes(doc: dict, road_pts: np.ndarray) -> tuple[LaneSpec, ...]:
    road_ref = ReferenceLine(road_pts)
    spacing = max(np.min(np.hypot(*np.diff(road_pts, axis=0).T)), 0.5)
    s = np.arange(0.0, road_ref.length, spacing)
    if road_ref.length - s[-1] < 0.25 * spacing:
        s = s[:-1]
    s = np.append(s, road_ref.length)
    lanes = []
    for i, raw in enumerate(_seq(doc.get("lanes"), "lanes", min_len=1)):
        d = _map(raw, f"lanes[{i}]")
        offset = _num(d, "offset_m", f"lanes[{i}]", required=True)
        width = _num(d, "width_m", f"lanes[{i}]", required=True, positive=True)
        pts = np.atleast_2d(road_ref.offset_point(s, np.full(s.size, offset)))
        lanes.append(LaneSpec(width=width, centerline=pts, ref=ReferenceLine(pts)))
    return tuple(lanes)


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file into a fully built Scenario."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario file is not valid YAML: {exc}")
    return parse_scenario(_map(doc, "scenario"))


def parse_scenario(doc: dict) -> Scenario:
    name = _str(doc, "name", "scenario", required=True)
    duration = _num(doc, "duration_s", "scenario", required=True, positive=True)
    v_ref = _num(doc, "v_ref_mps", "scenario", required=True, nonnegative=True)
    route_lane = _int(doc, "route_lane", "scenario", default=0, minimum=0)
    sensor_hz = _int(doc, "sensor_hz", "scenario", default=100, minimum=1)

    road_pts = _build_road_points(_map(doc.get("road"), "road"), "road")
    lanes = _build_lanes(doc, road_pts)
    if route_lane >= len(lanes):
        raise ScenarioError("scenario.route_lane: no such lane")

    ego = _map(doc.get("ego"), "ego")
    ego_lane = _int(ego, "lane", "ego", required=True, minimum=0)
    if ego_lane >= len(lanes):
        raise ScenarioError("ego.lane: no such lane")
    ego_s0 = _num(ego, "s0_m", "ego", required=True, nonnegative=True)
    if ego_s0 > lanes[ego_lane].ref.length:
        raise ScenarioError("ego.s0_m: beyond the end of the lane")
    ego_v0 = _num(ego, "v0_mps", "ego", required=True)
    ego_box = BoxFootprint(
        length=_num(ego, "length_m", "ego", default=4.8, positive=True),
        width=_num(ego, "width_m", "ego", default=1.8, positive=True),
    )

    obstacles = []
    for i, raw in enumerate(_seq(doc.get("obstacles", []), "obstacles")):
        d = _map(raw, f"obstacles[{i}]")
        pathi = f"obstacles[{i}]"
        lane = _int(d, "lane", pathi, required=True, minimum=0)
        if lane >= len(lanes):
            raise ScenarioError(f"{pathi}.lane: no such lane")
        s0 = _num(d, "s0_m", pathi, required=True, nonnegative=True)
        if s0 > lanes[lane].ref.length:
            raise ScenarioError(f"{pathi}.s0_m: beyond the end of the lane")
        behavior = _str(d, "behavior", pathi, default="cruise",
                        choices=("cruise", "stopped"))
        obstacles.append(
            ObstacleSpec(
                box=BoxFootprint(
                    length=_num(d, "length_m", pathi, required=True, positive=True),
                    width=_num(d, "width_m", pathi, required=True, positive=True),
                ),
                lane=lane,
                s0=s0,
                speed=_num(d, "speed_mps", pathi, default=0.0, nonnegative=True),
                behavior=behavior,
            )
        )

    stop = None
    if doc.get("stop") is not None:
        d = _map(doc["stop"], "stop")
        stop_lane = _int(d, "lane", "stop", required=True, minimum=0)
        if stop_lane >= len(lanes):
            raise ScenarioError("stop.lane: no such lane")
        stop_s = _num(d, "s_m", "stop", required=True, nonnegative=True)
        if stop_s > lanes[stop_lane].ref.length:
            raise ScenarioError("stop.s_m: beyond the end of the lane")
        stop = StopTargetSpec(lane=stop_lane, s=stop_s)

    sensors = _parse_sensors(_map(doc.get("sensors", {}), "sensors"))
    planner = _parse_planner(_map(doc.get("planner", {}), "planner"))

    try:
        return Scenario(
            name=name,
            duration=duration,
            v_ref=v_ref,
            route_lane=route_lane,
            lanes=lanes,
            ego_lane=ego_lane,
            ego_s0=ego_s0,
            ego_v0=ego_v0,
            ego_box=ego_box,
            obstacles=tuple(obstacles),
            stop=stop,
            sensors=sensors,
            sensor_hz=sensor_hz,
            planner=planner,
        )
    except ValueError as exc:
        raise ScenarioError(f"scenario: {exc}")


def _parse_sensors(d: dict) -> SensorErrorModel:
    return SensorErrorModel(
        v_offset=_num(d, "v_offset_mps", "sensors", default=0.0),
        sigma_v=_num(d, "sigma_v_mps", "sensors", default=0.0, nonnegative=True),
        yawrate_offset=_num(d, "yawrate_offset_dps", "sensors", default=0.0) * DEG,
        sigma_yawrate=_num(d, "sigma_yawrate_dps", "sensors", default=0.0,
                           nonnegative=True) * DEG,
    )


def _parse_planner(d: dict) -> PlannerConfig:
    base = PlannerConfig()
    weights = base.weights
    if "weights" in d:
        w = _map(d["weights"], "planner.weights")
        weights = CostWeights(
            k_jerk=_num(w, "k_jerk", "planner.weights", default=base.weights.k_jerk,
                        nonnegative=True),
            k_time=_num(w, "k_time", "planner.weights", default=base.weights.k_time,
                        nonnegative=True),
            k_terminal_d=_num(w, "k_terminal_d", "planner.weights",
                              default=base.weights.k_terminal_d, nonnegative=True),
            k_speed=_num(w, "k_speed", "planner.weights",
                         default=base.weights.k_speed, nonnegative=True),
            k_lon_vs_lat=_num(w, "k_lon_vs_lat", "planner.weights",
                              default=base.weights.k_lon_vs_lat, nonnegative=True),
        )
    limits = base.limits
    if "limits" in d:
        li = _map(d["limits"], "planner.limits")
        limits = Limits(
            a_max=_num(li, "a_max_mps2", "planner.limits", default=base.limits.a_max,
                       positive=True),
            v_max=_num(li, "v_max_mps", "planner.limits", default=base.limits.v_max,
                       positive=True),
            v_min=_num(li, "v_min_mps", "planner.limits", default=base.limits.v_min),
            kappa_max=_num(li, "kappa_max_inv_m", "planner.limits",
                           default=base.limits.kappa_max, positive=True),
        )
    durations = base.durations
    if "durations_s" in d:
        seq = _seq(d["durations_s"], "planner.durations_s", min_len=1)
        durations = tuple(float(t) for t in seq)
        if any(t <= 0 for t in durations):
            raise ScenarioError("planner.durations_s: entries must be > 0")
    offsets = base.speed_offsets
    if "speed_offsets_mps" in d:
        seq = _seq(d["speed_offsets_mps"], "planner.speed_offsets_mps", min_len=1)
        offsets = tuple(float(v) for v in seq)
    horizon = _num(d, "horizon_s", "planner", default=base.horizon, positive=True)
    if horizon < max(durations):
        raise ScenarioError("planner.horizon_s: must cover the longest duration")
    return PlannerConfig(
        weights=weights,
        limits=limits,
        durations=durations,
        speed_offsets=offsets,
        margin_lon=_num(d, "margin_lon_m", "planner", default=base.margin_lon,
                        nonnegative=True),
        margin_lat=_num(d, "margin_lat_m", "planner", default=base.margin_lat,
                        nonnegative=True),
        comfort_decel=_num(d, "comfort_decel_mps2", "planner",
                           default=base.comfort_decel, positive=True),
        horizon=horizon,
    )


def override_scenario(
    sc: Scenario,
    v_offset: Optional[float] = None,
    sigma_v: Optional[float] = None,
    yawrate_offset_dps: Optional[float] = None,
    sigma_yawrate_dps: Optional[float] = None,
    duration: Optional[float] = None,
    horizon: Optional[float] = None,
) -> Scenario:
    """Apply command-line overrides, returning a new Scenario."""
    sensors = sc.sensors
    if v_offset is not None:
        sensors = replace(sensors, v_offset=float(v_offset))
    if sigma_v is not None:
        if sigma_v < 0:
            raise ScenarioError("sigma_v: must be >= 0")
        sensors = replace(sensors, sigma_v=float(sigma_v))
    if yawrate_offset_dps is not None:
        sensors = replace(sensors, yawrate_offset=float(yawrate_offset_dps) * DEG)
    if sigma_yawrate_dps is not None:
        if sigma_yawrate_dps < 0:
            raise ScenarioError("sigma_yawrate: must be >= 0")
        sensors = replace(sensors, sigma_yawrate=float(sigma_yawrate_dps) * DEG)
    planner = sc.planner
    if horizon is not None:
        if horizon < max(planner.durations):
            raise ScenarioError("horizon: must cover the longest planner duration")
        planner = replace(planner, horizon=float(horizon))
    out = replace(sc, sensors=sensors, planner=planner)
    if duration is not None:
        if duration <= 0:
            raise ScenarioError("duration: must be > 0")
        out = replace(out, duration=float(duration))
    return out
