"""Conversions between Cartesian vehicle states and Frenet path coordinates.

Lateral motion is parametrized by time throughout (d, d_dot, d_ddot are
time derivatives), so the second-order transforms need the chain-rule terms
d' = d_dot / s_dot and d'' = (d_ddot - d' s_ddot) / s_dot^2. The transforms
are exact inverses of each other away from the |1 - d*kappa| singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reference_line import ReferenceLine
from .se2 import Pose2, wrap_angle

KD_SINGULARITY = 1e-6
_STOPPED_SDOT = 1e-3   # |s_dot| below which the state counts as stationary
_STOPPED_DDOT = 1e-2   # tolerated residual lateral rate at a stationary state
_CRAWL_SPEED = 0.15    # m/s; the direction of a slower velocity vector carries
                       # no usable heading information, so the tangent is
                       # computed against this floor instead


class ConversionError(ValueError):
    """Raised when a state cannot be mapped between representations."""


@dataclass(frozen=True)
class FrenetState:
    """Longitudinal/lateral path coordinates with time derivatives."""

    s: float
    s_dot: float
    s_ddot: float
    d: float
    d_dot: float
    d_ddot: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.s, self.s_dot, self.s_ddot, self.d, self.d_dot, self.d_ddot)


def cartesian_to_frenet(
    pose: Pose2,
    v: float,
    a: float,
    ref: ReferenceLine,
    curvature: float = 0.0,
) -> FrenetState:
    """Project a Cartesian state onto a reference line.

    Parameters
    ----------
    pose : Pose2
        Vehicle pose in the same frame as the reference line.
    v, a : float
        Signed speed along the heading and its time derivative.
    ref : ReferenceLine
    curvature : float
        The vehicle's own path curvature; needed for the second-order
        (acceleration) terms. Defaults to straight-line motion.
    """
    if not ref.on_domain(pose.x, pose.y):
        raise ConversionError("state projects outside the reference line domain")
    s, d = ref.project(pose.x, pose.y)
    theta_r = float(ref.heading_at(s))
    kappa_r = float(ref.curvature_at(s))
    kappa_r_rate = float(ref.curvature_rate_at(s))
    one_kd = 1.0 - kappa_r * d
    if abs(one_kd) < KD_SINGULARITY:
        raise ConversionError("state at the curvature-center singularity (1 - d*kappa ~ 0)")
    dtheta = wrap_angle(pose.theta - theta_r)
    cos_dt = math.cos(dtheta)
    if abs(cos_dt) < 1e-6:
        raise ConversionError("heading perpendicular to the reference line")
    tan_dt = math.tan(dtheta)

    s_dot = v * cos_dt / one_kd
    d_dot = v * math.sin(dtheta)
    d_prime = one_kd * tan_dt
    kr_d_prime = kappa_r_rate * d + kappa_r * d_prime
    dtheta_prime = one_kd / cos_dt * curvature - kappa_r
    s_ddot = (a * cos_dt - s_dot * s_dot * (d_prime * dtheta_prime - kr_d_prime)) / one_kd
    d_pp = -kr_d_prime * tan_dt + one_kd / (cos_dt * cos_dt) * (
        curvature * one_kd / cos_dt - kappa_r
    )
    d_ddot = d_pp * s_dot * s_dot + d_prime * s_ddot
    return FrenetState(float(s), s_dot, s_ddot, float(d), d_dot, d_ddot)


def frenet_to_cartesian(
    state: FrenetState, ref: ReferenceLine
) -> tuple[Pose2, float, float, float]:
    """Map a Frenet state back to (pose, v, a, curvature).

    Near-zero longitudinal speed with negligible lateral rate degenerates to
    a reference-aligned state (a stationary vehicle has no path tangent of
    its own); a genuinely lateral motion at zero speed is rejected.
    """
    arrs = frenet_to_cartesian_arrays(
        np.array([state.s]),
        np.array([state.s_dot]),
        np.array([state.s_ddot]),
        np.array([state.d]),
        np.array([state.d_dot]),
        np.array([state.d_ddot]),
        ref,
    )
    pose = Pose2(float(arrs["x"][0]), float(arrs["y"][0]), float(arrs["theta"][0]))
    return pose, float(arrs["v"][0]), float(arrs["a"][0]), float(arrs["curvature"][0])


def frenet_to_cartesian_arrays(
    s: np.ndarray,
    s_dot: np.ndarray,
    s_ddot: np.ndarray,
    d: np.ndarray,
    d_dot: np.ndarray,
    d_ddot: np.ndarray,
    ref: ReferenceLine,
) -> dict[str, np.ndarray]:
    """Vectorized inverse transform for whole candidate trajectories."""
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-9) or np.any(s > ref.length + 1e-9):
        raise ConversionError("arc length outside the reference line domain")
    theta_r = np.asarray(ref.heading_at(s), dtype=float)
    kappa_r = np.asarray(ref.curvature_at(s), dtype=float)
    kappa_r_rate = np.asarray(ref.curvature_rate_at(s), dtype=float)
    one_kd = 1.0 - kappa_r * d
    if np.any(np.abs(one_kd) < KD_SINGULARITY):
        raise ConversionError("trajectory crosses the curvature-center singularity")
    base = np.atleast_2d(ref.point_at(s))
    x = base[:, 0] - d * np.sin(theta_r)
    y = base[:, 1] + d * np.cos(theta_r)

    vs = s_dot * one_kd
    stopped = (np.abs(vs) < _STOPPED_SDOT) & (np.abs(d_dot) < _STOPPED_DDOT)
    slow = np.abs(vs) < _CRAWL_SPEED

    # Body-aligned tangent: atan(d_dot / vs) keeps backward motion near zero
    # heading deviation (v carries the sign below). Flooring the denominator
    # keeps the tangent bounded while crawling, where the exact direction of
    # the velocity vector is numerically meaningless.
    denom = np.where(vs < 0.0, -1.0, 1.0) * np.maximum(np.abs(vs), _CRAWL_SPEED)
    dtheta = np.where(stopped, 0.0, np.arctan(d_dot / denom))
    cos_dt = np.cos(dtheta)

    theta = wrap_vec(theta_r + dtheta)
    v = vs / cos_dt
    # The chain-rule terms divide by s_dot twice; below the crawl floor they
    # are dominated by noise, so the curvature and acceleration fall back to
    # their stationary forms there.
    safe_sdot = np.where(slow, 1.0, s_dot)
    d_prime = np.where(slow, 0.0, d_dot / safe_sdot)
    d_pp = np.where(slow, 0.0, (d_ddot - d_prime * s_ddot) / (safe_sdot * safe_sdot))
    tan_dt = np.tan(dtheta)
    kr_d_prime = kappa_r_rate * d + kappa_r * d_prime
    kappa = np.where(
        slow,
        kappa_r / one_kd,
        ((d_pp + kr_d_prime * tan_dt) * cos_dt * cos_dt / one_kd + kappa_r)
        * cos_dt
        / one_kd,
    )
    a = np.where(
        slow,
        s_ddot * one_kd,
        s_ddot * one_kd / cos_dt
        + s_dot * s_dot / cos_dt * (d_prime * (kappa * one_kd / cos_dt - kappa_r) - kr_d_prime),
    )
    return {
        "x": x, "y": y, "theta": theta, "v": v, "a": a, "curvature": kappa,
        "theta_ref": theta_r, "kappa_ref": kappa_r, "one_kd": one_kd,
    }


def wrap_vec(theta: np.ndarray) -> np.ndarray:
    """Vectorized angle wrap to (-pi, pi]."""
    out = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)
