"""Run orchestration: world, sensors, planner and monitor in one loop.

Each run drives a single scenario at a fixed replanning rate, feeding the
planner nothing but perception snapshots and dead-reckoned pose deltas, and
writes one line-delimited JSON record per frame plus a final summary. Frame
records carry full-precision state so runs can be compared bit-for-bit;
only display-oriented extras (candidate fans, measurement traces) are
rounded. See docs/log_schema.md for the record layout.
"""

from __future__ import annotations

import importlib.metadata
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, TextIO

import numpy as np

from .frenet import ConversionError
from .loop import (
    CoverageError,
    PlanResult,
    StartState,
    build_reference,
    cold_start,
    extract_start_state,
    plan_frame,
)
from .motion import EstimationError, PoseDelta, dead_reckon_wheel, estimation_error, sample_measurements
from .reference_line import ReferenceLine
from .scenario_io import load_scenario, override_scenario
from .se2 import TRAJECTORY_DT, IDENTITY, Pose2, interpolate_state, relative, wrap_angle
from .sim import (
    Scenario,
    SimulationFault,
    WorldState,
    evaluate_safety,
    executed_tick_twists,
    footprint_inside_lane,
    init_world,
    perceive,
    step_world,
    true_delta,
)
from .stability import StabilityRecord, analyze_trace, make_record, toy_orbit_sim

LOG_SCHEMA = "localplan-log/1"

EXIT_CLEAN = 0
EXIT_COLLISION = 2
EXIT_FAULT = 3

TOY_X0 = (8.0, 6.0, 0.0)
TOY_STEP_GAIN = 0.5
TOY_STEP_CAP = 0.5
TOY_EPS_BOUND = 0.01
TOY_N_STEPS = 1000


def _version() -> str:
    try:
        return importlib.metadata.version("localplan")
    except importlib.metadata.PackageNotFoundError:
        return "0.0.0"


@dataclass(frozen=True)
class RunConfig:
    """One run invocation: scenario, seed, overrides, output location."""

    scenario_path: Optional[str] = None
    seed: int = 0
    v_offset: Optional[float] = None
    sigma_v: Optional[float] = None
    yawrate_offset_dps: Optional[float] = None
    sigma_yawrate_dps: Optional[float] = None
    duration: Optional[float] = None
    replan_hz: float = 10.0
    horizon: Optional[float] = None
    output_dir: str = "runs"
    toy_orbit: bool = False
    fan_every: int = 5
    log_name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.replan_hz <= 0.0:
            raise ValueError("replan_hz must be positive")
        if self.horizon is not None and self.horizon < 1.0 / self.replan_hz:
            raise ValueError("horizon must cover at least one replanning period")
        steps = 1.0 / (self.replan_hz * TRAJECTORY_DT)
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError(
                "replanning period must be a whole number of trajectory sample steps"
            )
        if not self.toy_orbit and self.scenario_path is None:
            raise ValueError("scenario_path is required unless running the toy orbit")
        if self.fan_every < 1:
            raise ValueError("fan_every must be >= 1")


@dataclass
class RunResult:
    exit_status: int
    log_path: str
    summary: dict


def run(config: RunConfig) -> RunResult:
    """Execute one run (scenario or toy orbit) and write its log."""
    if config.toy_orbit:
        return _run_toy_orbit(config)
    return _run_scenario(config)


# ---------------------------------------------------------------------------
# scenario runs


def _run_scenario(config: RunConfig) -> RunResult:
    sc = load_scenario(config.scenario_path)
    sc = override_scenario(
        sc,
        v_offset=config.v_offset,
        sigma_v=config.sigma_v,
        yawrate_offset_dps=config.yawrate_offset_dps,
        sigma_yawrate_dps=config.sigma_yawrate_dps,
        duration=config.duration,
        horizon=config.horizon,
    )
    rng_sensor, _ = _spawn_streams(config.seed)

    dt = 1.0 / config.replan_hz
    steps_per_frame = int(round(dt / TRAJECTORY_DT))
    n_frames = max(1, int(round(sc.duration * config.replan_hz)))
    horizon_steps = int(round(sc.planner.horizon / TRAJECTORY_DT))

    world = init_world(sc)
    route = sc.lanes[sc.route_lane].ref
    g_stop = sc.stop_pose()
    stop_route_s = None
    if g_stop is not None:
        stop_route_s = float(route.project(g_stop.x, g_stop.y)[0])

    os.makedirs(config.output_dir, exist_ok=True)
    name = config.log_name or f"{sc.name}_seed{config.seed}.jsonl"
    log_path = os.path.join(config.output_dir, name)

    eps_rows: list[tuple[float, float, float]] = []
    stability_records: list[StabilityRecord] = []
    lane_changes: list[dict] = []
    change_open: Optional[dict] = None
    margins: list[tuple[float, float]] = []  # (t, lane_margin)

    prev_plan = None
    prev_start: Optional[StartState] = None
    prev_stop_local: Optional[Pose2] = None
    prev_world: Optional[WorldState] = None
    pending_twists: Optional[list[tuple[float, float]]] = None

    exit_status = EXIT_CLEAN
    collision_t: Optional[float] = None
    fault: Optional[str] = None
    frames_logged = 0

    with open(log_path, "w", encoding="utf-8") as fh:
        _write(fh, _header_record(sc, config, n_frames, stop_route_s))
        for k in range(n_frames):
            t_k = world.t
            collided, lane_margin = evaluate_safety(world, sc)
            margins.append((t_k, lane_margin))
            percept = perceive(world, sc, horizon_steps)
            ref = build_reference(percept.ref_points)

            if k == 0:
                est = PoseDelta(IDENTITY)
                tru = PoseDelta(IDENTITY)
                eps = EstimationError(0.0, 0.0, 0.0)
                samples = []
                profile = []
            else:
                t_prev = t_k - dt
                dt_tick = dt / len(pending_twists)
                profile = [
                    (t_prev + j * dt_tick, v, w)
                    for j, (v, w) in enumerate(pending_twists, start=1)
                ]
                samples = sample_measurements(profile, sc.sensors, rng_sensor)
                est = dead_reckon_wheel(samples, dt_tick)
                tru = true_delta(prev_world, world)
                eps = estimation_error(tru.value, est.value)
                eps_rows.append((eps.dx, eps.dy, eps.dtheta))

            if prev_plan is None:
                start = cold_start(sc.ego_v0, ref)
            else:
                try:
                    start = extract_start_state(prev_plan, est, t_k, ref)
                except CoverageError:
                    start = cold_start(prev_plan.points[-1].v, ref)

            try:
                result = plan_frame(
                    percept,
                    start,
                    sc.planner,
                    ref,
                    sc.ego_box,
                    frame_id=k,
                    start_index=k * steps_per_frame,
                )
            except ConversionError as exc:
                fault = f"planning failed at t={t_k:.2f}s: {exc}"
                exit_status = EXIT_FAULT
                break

            srec = None
            if (
                sc.stop is not None
                and k >= 1
                and prev_stop_local is not None
                and prev_plan.covers(t_k)
            ):
                srec = _stability_record(
                    k, t_k, prev_start, prev_plan, prev_stop_local,
                    prev_world, world, g_stop,
                )
                stability_records.append(srec)

            _write(
                fh,
                _frame_record(
                    k, t_k, world, est, tru, eps, samples, profile, start,
                    result, percept, collided, lane_margin, srec,
                    fan=(k % config.fan_every == 0),
                ),
            )
            frames_logged += 1

            if collided:
                collision_t = t_k
                exit_status = EXIT_COLLISION
                break

            change_open = _track_lane_change(
                change_open, lane_changes, result, t_k,
            )

            twists, executed_end = executed_tick_twists(
                result.trajectory, t_k, dt, sc.sensor_hz
            )
            prev_world = world
            try:
                world = step_world(
                    world, result.trajectory, sc, dt, executed_end=executed_end
                )
            except SimulationFault as exc:
                fault = str(exc)
                exit_status = EXIT_FAULT
                break

            pending_twists = twists
            prev_plan = result.trajectory
            prev_start = start
            prev_stop_local = _local_stop_pose(percept, result, ref)

            if change_open is not None and footprint_inside_lane(
                world, sc, change_open["to"]
            ):
                change_open["end_t"] = world.t
                change_open.pop("_from_streak", None)
                lane_changes.append(change_open)
                change_open = None
        else:
            collided, lane_margin = evaluate_safety(world, sc)
            margins.append((world.t, lane_margin))
            if collided:
                collision_t = world.t
                exit_status = EXIT_COLLISION

        # An interval that never completed (footprint never settled inside the
        # target lane) is not a lane change; its frames count as ordinary
        # driving in the margin statistics.

        summary = _summary_record(
            sc, world, exit_status, collision_t, fault, frames_logged,
            eps_rows, stability_records, lane_changes, margins,
            g_stop, stop_route_s, route,
        )
        _write(fh, summary)

    return RunResult(exit_status=exit_status, log_path=log_path, summary=summary)


def _spawn_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """One seed, two independent substreams: sensor noise and toy orbit."""
    children = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(children[0]), np.random.default_rng(children[1])


def _local_stop_pose(percept, result: PlanResult, ref: ReferenceLine) -> Optional[Pose2]:
    """Perceived stop target as a full pose in the current local frame."""
    if percept.stop_point is None or result.stop_s is None:
        return None
    sx, sy = percept.stop_point
    return Pose2(float(sx), float(sy), float(ref.heading_at(result.stop_s)))


def _vec(p: Pose2) -> np.ndarray:
    return np.array([p.x, p.y, p.theta], dtype=float)


def _vec_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a - b
    out[2] = wrap_angle(out[2])
    return out


def _stability_record(
    k: int,
    t_k: float,
    prev_start: StartState,
    prev_plan,
    prev_stop_local: Pose2,
    prev_world: WorldState,
    world: WorldState,
    g_stop: Pose2,
) -> StabilityRecord:
    """Monitored step k-1 -> k in stop-target coordinates.

    The planned step is what the planner believed it would do (its start
    state and selected trajectory relative to the perceived stop pose);
    the realized step comes from ground truth. Their difference is the
    disturbance the estimation error injected into the closed loop.
    """
    planned_pose = interpolate_state(prev_plan, t_k).pose
    xhat_prev = _vec(relative(prev_stop_local, prev_start.pose))
    xhat_next = _vec(relative(prev_stop_local, planned_pose))
    planned_step = _vec_diff(xhat_next, xhat_prev)

    x_prev = _vec(relative(g_stop, prev_world.ego_pose))
    x_curr = _vec(relative(g_stop, world.ego_pose))
    rho_true = _vec_diff(x_curr, x_prev)

    epsilon = rho_true - planned_step
    epsilon[2] = wrap_angle(epsilon[2])
    return make_record(k, x_prev, planned_step, epsilon)


def _track_lane_change(
    change_open: Optional[dict],
    lane_changes: list[dict],
    result: PlanResult,
    t_k: float,
) -> Optional[dict]:
    sel = result.selected.lane_index
    cur = result.current_lane
    if change_open is None:
        if sel != cur:
            return {"start_t": t_k, "from": cur, "to": sel}
        return None
    if sel == change_open["from"] and cur == change_open["from"]:
        # Selection fell back to the original lane before the believed state
        # ever left it.  A single such frame is selection jitter in the middle
        # of the manoeuvre; a sustained fall-back means the manoeuvre was
        # abandoned and its frames count as ordinary driving.
        streak = change_open.get("_from_streak", 0) + 1
        if streak >= 2:
            return None
        change_open["_from_streak"] = streak
        return change_open
    change_open.pop("_from_streak", None)
    if sel not in (change_open["to"], change_open["from"]) and sel != cur:
        change_open["to"] = sel
    return change_open


# ---------------------------------------------------------------------------
# record builders


def _write(fh: TextIO, obj: dict) -> None:
    fh.write(json.dumps(obj, separators=(",", ":"), allow_nan=False))
    fh.write("\n")


def _pose_dict(p: Pose2) -> dict:
    return {"x": p.x, "y": p.y, "theta": p.theta}


def _round_list(values, ndigits: int) -> list:
    return [round(float(v), ndigits) for v in values]


def _header_record(
    sc: Scenario, config: RunConfig, n_frames: int, stop_route_s: Optional[float]
) -> dict:
    lanes = []
    for lane in sc.lanes:
        pts = lane.centerline[:: max(1, len(lane.centerline) // 200)]
        lanes.append(
            {
                "width_m": lane.width,
                "length_m": lane.ref.length,
                "centerline": [_round_list(p, 2) for p in pts],
            }
        )
    stop = None
    if sc.stop is not None:
        g = sc.stop_pose()
        stop = {
            "lane": sc.stop.lane,
            "s_m": sc.stop.s,
            "route_s_m": stop_route_s,
            "pose": _pose_dict(g),
        }
    return {
        "record": "header",
        "schema": LOG_SCHEMA,
        "kind": "scenario",
        "version": _version(),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "scenario": {
            "name": sc.name,
            "source": config.scenario_path,
            "duration_s": sc.duration,
            "v_ref_mps": sc.v_ref,
            "route_lane": sc.route_lane,
            "sensor_hz": sc.sensor_hz,
            "lanes": lanes,
            "ego": {
                "lane": sc.ego_lane,
                "s0_m": sc.ego_s0,
                "v0_mps": sc.ego_v0,
                "length_m": sc.ego_box.length,
                "width_m": sc.ego_box.width,
            },
            "obstacles": [
                {
                    "lane": ob.lane,
                    "s0_m": ob.s0,
                    "speed_mps": ob.speed,
                    "behavior": ob.behavior,
                    "length_m": ob.box.length,
                    "width_m": ob.box.width,
                }
                for ob in sc.obstacles
            ],
            "stop": stop,
        },
        "sensors": {
            "v_offset_mps": sc.sensors.v_offset,
            "sigma_v_mps": sc.sensors.sigma_v,
            "yawrate_offset_rps": sc.sensors.yawrate_offset,
            "sigma_yawrate_rps": sc.sensors.sigma_yawrate,
        },
        "planner": {
            "weights": {
                "k_jerk": sc.planner.weights.k_jerk,
                "k_time": sc.planner.weights.k_time,
                "k_terminal_d": sc.planner.weights.k_terminal_d,
                "k_speed": sc.planner.weights.k_speed,
                "k_lon_vs_lat": sc.planner.weights.k_lon_vs_lat,
            },
            "limits": {
                "a_max_mps2": sc.planner.limits.a_max,
                "v_max_mps": sc.planner.limits.v_max,
                "v_min_mps": sc.planner.limits.v_min,
                "kappa_max_inv_m": sc.planner.limits.kappa_max,
            },
            "durations_s": list(sc.planner.durations),
            "speed_offsets_mps": list(sc.planner.speed_offsets),
            "margin_lon_m": sc.planner.margin_lon,
            "margin_lat_m": sc.planner.margin_lat,
            "comfort_decel_mps2": sc.planner.comfort_decel,
            "horizon_s": sc.planner.horizon,
        },
        "run": {
            "seed": config.seed,
            "replan_hz": config.replan_hz,
            "n_frames": n_frames,
            "fan_every": config.fan_every,
            "trajectory_dt_s": TRAJECTORY_DT,
        },
        "rng": {
            "algorithm": type(np.random.default_rng().bit_generator).__name__,
            "streams": ["sensor", "toy"],
        },
    }


def _candidate_dict(cand, include_path: bool) -> dict:
    out = {
        "lane": cand.lane_index,
        "duration_s": cand.duration,
        "mode": cand.mode,
        "cost": None if math.isinf(cand.total_cost) else round(cand.total_cost, 4),
        "feasible": bool(cand.feasible),
        "reason": cand.infeasible_reason,
    }
    if include_path and cand.arrays is not None:
        out["xy"] = [
            [round(float(x), 2), round(float(y), 2)]
            for x, y in zip(cand.arrays["x"][::3], cand.arrays["y"][::3])
        ]
    return out


def _frame_record(
    k: int,
    t_k: float,
    world: WorldState,
    est: PoseDelta,
    tru: PoseDelta,
    eps: EstimationError,
    samples,
    profile,
    start: StartState,
    result: PlanResult,
    percept,
    collided: bool,
    lane_margin: float,
    srec: Optional[StabilityRecord],
    fan: bool,
) -> dict:
    sel = result.selected
    traj = result.trajectory
    sel_path = [
        [round(p.pose.x, 4), round(p.pose.y, 4), round(p.pose.theta, 5),
         round(p.v, 4)]
        for p in traj.points
    ]
    record = {
        "record": "frame",
        "k": k,
        "t": t_k,
        "est_delta": _pose_dict(est.value),
        "true_delta": _pose_dict(tru.value),
        "epsilon": {"dx": eps.dx, "dy": eps.dy, "dtheta": eps.dtheta},
        "ego": {
            "x": world.ego_pose.x,
            "y": world.ego_pose.y,
            "theta": world.ego_pose.theta,
            "v": world.ego_v,
            "a": world.ego_a,
            "route_s": percept.ego_route_s,
        },
        "obstacles": [
            {
                "x": ob.pose.x,
                "y": ob.pose.y,
                "theta": ob.pose.theta,
                "v": ob.v,
                "s": ob.s,
            }
            for ob in world.obstacles
        ],
        "start": {
            "x": start.pose.x,
            "y": start.pose.y,
            "theta": start.pose.theta,
            "v": start.v,
            "a": start.a,
            "curvature": start.curvature,
            "s": start.frenet.s,
            "s_dot": start.frenet.s_dot,
            "s_ddot": start.frenet.s_ddot,
            "d": start.frenet.d,
            "d_dot": start.frenet.d_dot,
            "d_ddot": start.frenet.d_ddot,
            "cold": start.cold,
        },
        "selected": {
            "lane": sel.lane_index,
            "duration_s": sel.duration,
            "mode": sel.mode,
            "gen_index": sel.gen_index,
            "cost": None if math.isinf(sel.total_cost) else sel.total_cost,
            "path": sel_path,
        },
        "pool": {
            "generated": result.generated,
            "feasible": result.feasible_count,
            "fallback": result.fallback,
            "mode": result.mode,
            "current_lane": result.current_lane,
            "stop_s": result.stop_s,
        },
        "meas": {
            "t": _round_list([s.t for s in samples], 4),
            "v": _round_list([s.v_m for s in samples], 5),
            "yawrate": _round_list([s.yawrate_m for s in samples], 6),
            "v_true": _round_list([p[1] for p in profile], 5),
            "yawrate_true": _round_list([p[2] for p in profile], 6),
        },
        "collision": collided,
        "lane_margin": lane_margin,
    }
    if fan:
        record["candidates"] = [
            _candidate_dict(c, include_path=True) for c in result.pool
        ]
    if srec is not None:
        record["stability"] = {
            "k": srec.k,
            "x_prev": list(srec.x_prev),
            "planned_step": list(srec.planned_step),
            "epsilon": list(srec.epsilon),
            "rho": list(srec.rho),
            "V": srec.V,
            "delta_V": srec.delta_V,
            "cond_inner": srec.cond_inner,
            "cond_norm": srec.cond_norm,
        }
    return record


def _quartile_stats(values: np.ndarray) -> dict:
    if values.size == 0:
        return {"mean": None, "sd": None, "q25": None, "q50": None, "q75": None}
    q25, q50, q75 = np.percentile(values, [25.0, 50.0, 75.0])
    return {
        "mean": float(np.mean(values)),
        "sd": float(np.std(values)),
        "q25": float(q25),
        "q50": float(q50),
        "q75": float(q75),
    }


def _summary_record(
    sc: Scenario,
    world: WorldState,
    exit_status: int,
    collision_t: Optional[float],
    fault: Optional[str],
    frames_logged: int,
    eps_rows: list,
    stability_records: list,
    lane_changes: list,
    margins: list,
    g_stop: Optional[Pose2],
    stop_route_s: Optional[float],
    route: ReferenceLine,
) -> dict:
    eps = np.asarray(eps_rows, dtype=float).reshape(-1, 3)
    stop_deviation = None
    if g_stop is not None:
        stop_deviation = float(
            math.hypot(world.ego_pose.x - g_stop.x, world.ego_pose.y - g_stop.y)
        )
    bounds = None
    if stability_records:
        b = analyze_trace(stability_records)
        bounds = {
            "rho_bar": b.rho_bar,
            "eta_hat": b.eta_hat,
            "containment_radius": b.containment_radius,
            "entry_step": b.entry_step,
            "contained": b.contained,
        }
    in_change = lambda t: any(c["start_t"] <= t <= c["end_t"] for c in lane_changes)
    outside = [m for t, m in margins if not in_change(t)]
    all_m = [m for _, m in margins]
    route_s, _ = route.project(world.ego_pose.x, world.ego_pose.y)
    return {
        "record": "summary",
        "exit_status": exit_status,
        "collision": collision_t is not None,
        "collision_t": collision_t,
        "fault": fault,
        "frames": frames_logged,
        "duration_s": sc.duration,
        "final": {
            "t": world.t,
            "ego": _pose_dict(world.ego_pose),
            "v": world.ego_v,
            "route_s": float(route_s),
            "stop_deviation_m": stop_deviation,
        },
        "stop_route_s": stop_route_s,
        "lane_changes": lane_changes,
        "min_lane_margin": min(all_m) if all_m else None,
        "min_lane_margin_outside_changes": min(outside) if outside else None,
        "lane_crossed": bool(outside and min(outside) < 0.0),
        "epsilon_stats": {
            "dx": _quartile_stats(eps[:, 0]),
            "dy": _quartile_stats(eps[:, 1]),
            "dtheta": _quartile_stats(eps[:, 2]),
        },
        "stability": bounds,
    }


# ---------------------------------------------------------------------------
# toy orbit runs


def _run_toy_orbit(config: RunConfig) -> RunResult:
    _, rng_toy = _spawn_streams(config.seed)
    records = toy_orbit_sim(
        TOY_X0,
        step_gain=TOY_STEP_GAIN,
        step_cap=TOY_STEP_CAP,
        eps_bound=TOY_EPS_BOUND,
        n_steps=TOY_N_STEPS,
        rng_seed=rng_toy,
    )
    bounds = analyze_trace(records)

    os.makedirs(config.output_dir, exist_ok=True)
    name = config.log_name or f"toy_orbit_seed{config.seed}.jsonl"
    log_path = os.path.join(config.output_dir, name)
    summary = {
        "record": "summary",
        "exit_status": EXIT_CLEAN,
        "kind": "toy-orbit",
        "steps": len(records),
        "final_norm": float(np.linalg.norm(records[-1].x_prev + records[-1].rho)),
        "stability": {
            "rho_bar": bounds.rho_bar,
            "eta_hat": bounds.eta_hat,
            "containment_radius": bounds.containment_radius,
            "entry_step": bounds.entry_step,
            "contained": bounds.contained,
        },
    }
    with open(log_path, "w", encoding="utf-8") as fh:
        _write(
            fh,
            {
                "record": "header",
                "schema": LOG_SCHEMA,
                "kind": "toy-orbit",
                "version": _version(),
                "created_at": datetime.now(timezone.utc).isoformat(),
                "params": {
                    "x0": list(TOY_X0),
                    "step_gain": TOY_STEP_GAIN,
                    "step_cap": TOY_STEP_CAP,
                    "eps_bound": TOY_EPS_BOUND,
                    "n_steps": TOY_N_STEPS,
                    "seed": config.seed,
                },
                "rng": {
                    "algorithm": type(np.random.default_rng().bit_generator).__name__,
                    "streams": ["sensor", "toy"],
                },
            },
        )
        for rec in records:
            _write(
                fh,
                {
                    "record": "toy_step",
                    "k": rec.k,
                    "x_prev": list(rec.x_prev),
                    "planned_step": list(rec.planned_step),
                    "epsilon": list(rec.epsilon),
                    "rho": list(rec.rho),
                    "V": rec.V,
                    "delta_V": rec.delta_V,
                    "cond_inner": rec.cond_inner,
                    "cond_norm": rec.cond_norm,
                },
            )
        _write(fh, summary)
    return RunResult(exit_status=EXIT_CLEAN, log_path=log_path, summary=summary)
