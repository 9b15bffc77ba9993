"""Sampling planner over Frenet coordinates.

A candidate is a (lateral quintic, longitudinal quartic-or-quintic) pair on a
shared duration. Pools are the Cartesian product of lane targets, speed (or
stop) targets, and durations; candidates are costed in closed form, filtered
against limits / lane bounds / predicted obstacle boxes, and the cheapest
feasible one wins. Ties prefer the current lane, then shorter durations, then
generation order, so results never depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .collision import BoxFootprint, obb_overlap_steps
from .frenet import ConversionError, FrenetState, frenet_to_cartesian_arrays
from .polynomials import fit_quartic, fit_quintic, jerk_sq_integral, poly_eval
from .reference_line import ReferenceLine
from .se2 import (
    TRAJECTORY_DT,
    LocalTrajectory,
    Pose2,
    TrajectoryPoint,
    trajectory_times,
)

VELOCITY_KEEPING = "velocity_keeping"
STOPPING = "stopping"


class NoFeasibleTrajectory(RuntimeError):
    """Raised by select_best when the filtered pool is empty."""


@dataclass(frozen=True)
class CostWeights:
    k_jerk: float = 0.1
    k_time: float = 0.1
    k_terminal_d: float = 1.0
    k_speed: float = 1.0
    k_lon_vs_lat: float = 1.0

    def __post_init__(self) -> None:
        vals = (self.k_jerk, self.k_time, self.k_terminal_d, self.k_speed, self.k_lon_vs_lat)
        if any(v < 0.0 for v in vals):
            raise ValueError("cost weights must be nonnegative")
        if all(v == 0.0 for v in vals):
            raise ValueError("at least one cost weight must be positive")


@dataclass(frozen=True)
class Limits:
    a_max: float = 4.0
    v_max: float = 15.0
    v_min: float = -0.5
    kappa_max: float = 0.2
    # curvature of a sampled point is numerically meaningless at near-zero
    # speed (heading is pinned to the reference there), so the kappa check
    # only applies at speeds where the vehicle actually traces the curve
    kappa_check_min_speed: float = 0.5

    def __post_init__(self) -> None:
        if self.a_max <= 0.0 or self.v_max <= 0.0 or self.kappa_max <= 0.0:
            raise ValueError("a_max, v_max, kappa_max must be positive")
        if self.v_min > 0.0:
            raise ValueError("v_min must be <= 0")


@dataclass(frozen=True)
class ObstaclePrediction:
    """One obstacle's predicted footprint per trajectory timestep (local frame)."""

    box: BoxFootprint
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray


@dataclass
class CandidateTrajectory:
    lateral_poly: np.ndarray
    longitudinal_poly: np.ndarray
    duration: float
    lane_index: int
    mode: str
    gen_index: int
    frame_id: int
    arrays: Optional[dict] = None
    cost_components: Optional[tuple] = None
    total_cost: float = float("inf")
    feasible: Optional[bool] = None
    infeasible_reason: Optional[str] = None
    _points: Optional[LocalTrajectory] = field(default=None, repr=False)

    @property
    def points(self) -> Optional[LocalTrajectory]:
        """Sampled LocalTrajectory, built on first access."""
        if self._points is None and self.arrays is not None:
            a = self.arrays
            pts = [
                TrajectoryPoint(
                    t=float(a["t"][j]),
                    pose=Pose2(float(a["x"][j]), float(a["y"][j]), float(a["theta"][j])),
                    v=float(a["v"][j]),
                    a=float(a["a"][j]),
                    curvature=float(a["curvature"][j]),
                )
                for j in range(len(a["t"]))
            ]
            self._points = LocalTrajectory(frame_id=self.frame_id, points=tuple(pts))
        return self._points


def generate_candidates(
    start: FrenetState,
    lane_targets: Sequence[float],
    speed_targets: Sequence[float],
    durations: Sequence[float],
    mode: str,
    ref: ReferenceLine,
    frame_id: int = 0,
    start_index: int = 0,
    stop_s: Optional[float] = None,
    dt: float = TRAJECTORY_DT,
) -> list[CandidateTrajectory]:
    """Build the candidate pool for one planning frame.

    Longitudinal targets are speeds in velocity-keeping mode; in stopping
    mode every candidate ends at rest at ``stop_s``. Durations are snapped
    to the sample grid so the last sample lands exactly on T.
    """
    if mode not in (VELOCITY_KEEPING, STOPPING):
        raise ValueError(f"unknown planning mode {mode!r}")
    if len(lane_targets) == 0 or len(durations) == 0:
        raise ValueError("lane_targets and durations must be nonempty")
    if mode == VELOCITY_KEEPING and len(speed_targets) == 0:
        raise ValueError("speed_targets must be nonempty in velocity-keeping mode")
    if mode == STOPPING and stop_s is None:
        raise ValueError("stopping mode requires stop_s")
    if any(T <= 0 for T in durations):
        raise ValueError("durations must be positive")

    lon_targets = list(speed_targets) if mode == VELOCITY_KEEPING else [float(stop_s)]
    pool: list[CandidateTrajectory] = []
    gen = 0
    for lane_index, d_target in enumerate(lane_targets):
        for target in lon_targets:
            for T in durations:
                n = int(round(T / dt))
                if n < 1:
                    raise ValueError("duration shorter than one sample step")
                T_eff = n * dt
                lat = fit_quintic(start.d, start.d_dot, start.d_ddot, d_target, 0.0, 0.0, T_eff)
                if mode == VELOCITY_KEEPING:
                    lon = fit_quartic(start.s, start.s_dot, start.s_ddot, target, 0.0, T_eff)
                else:
                    lon = fit_quintic(start.s, start.s_dot, start.s_ddot, target, 0.0, 0.0, T_eff)
                cand = CandidateTrajectory(
                    lateral_poly=lat,
                    longitudinal_poly=lon,
                    duration=T_eff,
                    lane_index=lane_index,
                    mode=mode,
                    gen_index=gen,
                    frame_id=frame_id,
                )
                gen += 1
                tau = np.arange(n + 1) * dt
                d = poly_eval(lat, tau)
                d_dot = poly_eval(lat, tau, 1)
                d_ddot = poly_eval(lat, tau, 2)
                s = poly_eval(lon, tau)
                s_dot = poly_eval(lon, tau, 1)
                s_ddot = poly_eval(lon, tau, 2)
                try:
                    cart = frenet_to_cartesian_arrays(s, s_dot, s_ddot, d, d_dot, d_ddot, ref)
                except ConversionError as exc:
                    cand.feasible = False
                    cand.infeasible_reason = f"conversion: {exc}"
                    pool.append(cand)
                    continue
                cand.arrays = {
                    "t": np.asarray(trajectory_times(n + 1, start_index, dt)),
                    "s": s, "s_dot": s_dot, "s_ddot": s_ddot,
                    "d": d, "d_dot": d_dot, "d_ddot": d_ddot,
                    "x": cart["x"], "y": cart["y"], "theta": cart["theta"],
                    "v": cart["v"], "a": cart["a"], "curvature": cart["curvature"],
                }
                pool.append(cand)
    return pool


def evaluate_cost(
    cand: CandidateTrajectory, weights: CostWeights, v_target: float
) -> float:
    """Closed-form cost; stores components on the candidate and returns the total.

    Components are kept unweighted: (jerk_lat, jerk_lon, time, terminal d^2,
    terminal speed deviation^2), so the stored total can always be recomputed
    from them and the weights.
    """
    T = cand.duration
    jerk_lat = jerk_sq_integral(cand.lateral_poly, T)
    jerk_lon = jerk_sq_integral(cand.longitudinal_poly, T)
    d_T = float(poly_eval(cand.lateral_poly, T))
    sd_T = float(poly_eval(cand.longitudinal_poly, T, 1))
    comp = (jerk_lat, jerk_lon, T, d_T * d_T, (sd_T - v_target) ** 2)
    cand.cost_components = comp
    cand.total_cost = total_cost(comp, weights)
    return cand.total_cost


def total_cost(components: Sequence[float], weights: CostWeights) -> float:
    jerk_lat, jerk_lon, T, term_d, term_v = components
    return (
        weights.k_jerk * (jerk_lat + weights.k_lon_vs_lat * jerk_lon)
        + weights.k_time * T
        + weights.k_terminal_d * term_d
        + weights.k_speed * term_v
    )


def filter_candidates(
    pool: list[CandidateTrajectory],
    obstacles: Sequence[ObstaclePrediction],
    lane_bounds: Sequence[tuple[float, float]],
    limits: Limits,
    ego_box: BoxFootprint,
    current_lane: int,
) -> list[CandidateTrajectory]:
    """Set feasibility flags in place and return the pool.

    Lane-keeping candidates must stay inside their own lane; lane-change
    candidates sweep between lanes, so they are only held to the outer road
    bounds. Bound checks use the path of the footprint center with a
    half-width allowance (heading deviations within a lane are small).
    """
    road_lo = min(b[0] for b in lane_bounds) if lane_bounds else -np.inf
    road_hi = max(b[1] for b in lane_bounds) if lane_bounds else np.inf
    half_w = 0.5 * ego_box.width

    for cand in pool:
        if cand.feasible is False:
            continue
        a = cand.arrays
        v = a["v"]
        acc = a["a"]
        kappa = a["curvature"]
        if np.any(v > limits.v_max + 1e-9):
            cand.feasible, cand.infeasible_reason = False, "v_max"
            continue
        if np.any(v < limits.v_min - 1e-9):
            cand.feasible, cand.infeasible_reason = False, "v_min"
            continue
        if np.any(np.abs(acc) > limits.a_max + 1e-9):
            cand.feasible, cand.infeasible_reason = False, "a_max"
            continue
        # The curvature and total-acceleration checks lose their grip near
        # standstill (curvature is skipped, acceleration is longitudinal
        # there), so bound the lateral profile directly: a short-duration
        # candidate snapping sideways across a residual offset is not a
        # manoeuvre the vehicle can make at any speed. The bound is checked
        # on a fine grid — a short candidate's 0.1 s samples can straddle
        # the acceleration peaks of its own polynomial.
        fine = np.linspace(0.0, cand.duration, 33)
        if np.any(np.abs(poly_eval(cand.lateral_poly, fine, 2)) > limits.a_max + 1e-9):
            cand.feasible, cand.infeasible_reason = False, "lat_accel"
            continue
        moving = np.abs(v) >= limits.kappa_check_min_speed
        if np.any(np.abs(kappa[moving]) > limits.kappa_max + 1e-9):
            cand.feasible, cand.infeasible_reason = False, "kappa_max"
            continue
        d = a["d"]
        if lane_bounds:
            if np.any(d < road_lo + half_w - 1e-9) or np.any(d > road_hi - half_w + 1e-9):
                cand.feasible, cand.infeasible_reason = False, "lane_bounds"
                continue
            if cand.lane_index == current_lane:
                # The start may sit slightly outside the lane after a
                # disturbance; a keeping candidate is valid as long as it
                # comes back into the lane band and then stays there.
                lo, hi = lane_bounds[cand.lane_index]
                inside = (d >= lo + half_w - 1e-9) & (d <= hi - half_w + 1e-9)
                if not bool(inside.any()) or not bool(inside[np.argmax(inside):].all()):
                    cand.feasible, cand.infeasible_reason = False, "lane_bounds"
                    continue
        hit = False
        for obs in obstacles:
            n = min(len(a["x"]), len(obs.x))
            if n == 0:
                continue
            if np.any(
                obb_overlap_steps(
                    a["x"][:n], a["y"][:n], a["theta"][:n], ego_box,
                    obs.x[:n], obs.y[:n], obs.theta[:n], obs.box,
                )
            ):
                hit = True
                break
        if hit:
            cand.feasible, cand.infeasible_reason = False, "collision"
            continue
        cand.feasible = True
    return pool


def select_best(pool: Sequence[CandidateTrajectory], current_lane: int) -> CandidateTrajectory:
    """Minimum-cost feasible candidate; deterministic tie-breaking."""
    best = None
    best_key = None
    for cand in pool:
        if not cand.feasible:
            continue
        key = (
            cand.total_cost,
            0 if cand.lane_index == current_lane else 1,
            cand.duration,
            cand.gen_index,
        )
        if best_key is None or key < best_key:
            best, best_key = cand, key
    if best is None:
        raise NoFeasibleTrajectory("no feasible candidate in pool")
    return best
