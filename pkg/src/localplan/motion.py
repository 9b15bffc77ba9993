"""Noisy speed / yaw-rate measurement models and dead-reckoned pose deltas.

The frame-to-frame motion estimate is the only state carried between
planning cycles, so this module is deliberately small and exactly
invertible: integrating a constant (v, omega) twist per sensor tick is the
closed-form arc step, and ``twist_from_delta`` recovers the twist from a
one-tick pose change. A noise-free measurement stream therefore dead
reckons back to the true delta at float precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .se2 import Pose2, wrap_angle

OMEGA_STRAIGHT_EPS = 1e-9  # below this yaw rate [rad/s] use the straight-line limit


@dataclass(frozen=True)
class SensorErrorModel:
    """Additive offset + Gaussian noise on speed and yaw-rate readings.

    A measured speed is ``v_offset + n`` where n ~ N(true_v, sigma_v^2);
    the yaw-rate channel is analogous. All values are SI (m/s, rad/s).
    """

    v_offset: float = 0.0
    sigma_v: float = 0.0
    yawrate_offset: float = 0.0
    sigma_yawrate: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma_v < 0.0 or self.sigma_yawrate < 0.0:
            raise ValueError("noise standard deviations must be non-negative")


ZERO_ERROR = SensorErrorModel()


@dataclass(frozen=True)
class MotionSample:
    """One sensor tick: measured speed and yaw rate at time t."""

    t: float
    v_m: float
    yawrate_m: float


@dataclass(frozen=True)
class PoseDelta:
    """Estimated rigid motion of the vehicle over one replanning interval,
    expressed in the frame at the start of the interval."""

    value: Pose2

    def as_array(self) -> np.ndarray:
        return np.array([self.value.x, self.value.y, self.value.theta])


@dataclass(frozen=True)
class EstimationError:
    """Componentwise (true - estimated) frame motion, heading wrapped."""

    dx: float
    dy: float
    dtheta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dtheta])


def sample_measurements(
    true_profile: Sequence[tuple[float, float, float]],
    model: SensorErrorModel,
    rng: int | np.random.Generator,
) -> list[MotionSample]:
    """Corrupt a true (t, v, yawrate) profile with the sensor error model.

    Parameters
    ----------
    true_profile : sequence of (t, v, yawrate)
        Ground-truth twist per sensor tick, strictly increasing in t.
    model : SensorErrorModel
    rng : int or numpy Generator
        Seed or generator; a given seed reproduces the exact sample stream.

    With a zero model the samples equal the truth bit-for-bit.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    prof = np.asarray(true_profile, dtype=float)
    if prof.ndim != 2 or prof.shape[1] != 3:
        raise ValueError("true_profile must be a sequence of (t, v, yawrate)")
    t = prof[:, 0]
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("profile times must be strictly increasing")
    v_m = model.v_offset + rng.normal(prof[:, 1], model.sigma_v)
    w_m = model.yawrate_offset + rng.normal(prof[:, 2], model.sigma_yawrate)
    return [MotionSample(float(ti), float(vi), float(wi)) for ti, vi, wi in zip(t, v_m, w_m)]


def constant_twist_step(pose: Pose2, v: float, omega: float, dt: float) -> Pose2:
    """Advance a pose along the exact constant (v, omega) arc for dt seconds."""
    th = pose.theta
    if abs(omega) < OMEGA_STRAIGHT_EPS:
        return Pose2(
            pose.x + v * dt * math.cos(th),
            pose.y + v * dt * math.sin(th),
            wrap_angle(th + omega * dt),
        )
    r = v / omega
    th1 = th + omega * dt
    return Pose2(
        pose.x + r * (math.sin(th1) - math.sin(th)),
        pose.y - r * (math.cos(th1) - math.cos(th)),
        wrap_angle(th1),
    )


def twist_from_delta(delta: Pose2, dt: float) -> tuple[float, float]:
    """Recover the constant twist whose dt-second arc produces ``delta``.

    Inverse of ``constant_twist_step`` from the identity pose. The chord
    length fixes |v| and the sign comes from the chord's projection onto the
    mid-arc heading, so slow backward motion is recovered correctly.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    omega = delta.theta / dt
    half = 0.5 * delta.theta
    along = delta.x * math.cos(half) + delta.y * math.sin(half)
    if abs(delta.theta) < OMEGA_STRAIGHT_EPS * dt:
        return along / dt, omega
    chord = math.hypot(delta.x, delta.y)
    v = math.copysign(chord * omega / (2.0 * math.sin(half)), along) if chord else 0.0
    # omega/(2 sin(theta/2)) is positive for small |theta|, so copysign keeps
    # the chord direction authoritative for the sign of v
    return v, omega


def _tick_duration(times: Sequence[float], dt: float | None) -> float:
    if dt is not None:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        return dt
    if len(times) < 2:
        raise ValueError("tick duration cannot be inferred from a single sample; pass dt")
    diffs = np.diff(np.asarray(times, dtype=float))
    if np.any(diffs <= 0.0):
        raise ValueError("sample times must be strictly increasing")
    return float(np.median(diffs))


def dead_reckon_wheel(
    samples: Sequence[MotionSample], dt: float | None = None
) -> PoseDelta:
    """Integrate wheel-odometry style (v, yawrate) ticks into a pose delta.

    Each sample's twist is held constant for one tick of duration ``dt``
    (inferred from the sample spacing when omitted) and integrated with the
    exact arc step, so piecewise-constant truth round-trips exactly.
    """
    if not samples:
        raise ValueError("at least one sample is required")
    tick = _tick_duration([s.t for s in samples], dt)
    pose = Pose2(0.0, 0.0, 0.0)
    for s in samples:
        pose = constant_twist_step(pose, s.v_m, s.yawrate_m, tick)
    return PoseDelta(pose)


def dead_reckon_imu(
    accel_samples: Sequence[tuple[float, float, float]],
    yawrate_samples: Sequence[tuple[float, float]],
    v0: tuple[float, float],
    dt: float | None = None,
) -> PoseDelta:
    """Double-integrate body accelerations plus yaw rate into a pose delta.

    Parameters
    ----------
    accel_samples : sequence of (t, ax, ay)
        Body-frame accelerations per tick.
    yawrate_samples : sequence of (t, yawrate)
        Must be on the same time grid as the accelerations.
    v0 : (vx, vy)
        Velocity at the start of the interval in the start frame. The
        acceleration integral alone cannot observe it, so it must be seeded.
    dt : float, optional
        Tick duration; inferred from the grid when omitted.

    Accelerations are rotated into the start frame with the mid-tick
    integrated heading before integrating, which keeps the scheme second
    order without leaving the plain double-integral model.
    """
    acc = np.asarray(accel_samples, dtype=float)
    yaw = np.asarray(yawrate_samples, dtype=float)
    if acc.ndim != 2 or acc.shape[1] != 3:
        raise ValueError("accel_samples must be a sequence of (t, ax, ay)")
    if yaw.ndim != 2 or yaw.shape[1] != 2:
        raise ValueError("yawrate_samples must be a sequence of (t, yawrate)")
    if acc.shape[0] != yaw.shape[0] or not np.allclose(acc[:, 0], yaw[:, 0], atol=1e-9):
        raise ValueError("acceleration and yaw-rate grids are misaligned")
    tick = _tick_duration(list(acc[:, 0]), dt)

    theta = 0.0
    vel = np.array(v0, dtype=float)
    pos = np.zeros(2)
    for (_, ax, ay), (_, w) in zip(acc, yaw):
        mid = theta + 0.5 * w * tick
        c, s = math.cos(mid), math.sin(mid)
        aw = np.array([c * ax - s * ay, s * ax + c * ay])
        pos = pos + vel * tick + 0.5 * aw * tick * tick
        vel = vel + aw * tick
        theta += w * tick
    return PoseDelta(Pose2(float(pos[0]), float(pos[1]), wrap_angle(theta)))


def estimation_error(true_delta: Pose2, est_delta: Pose2) -> EstimationError:
    """Componentwise difference (true - estimate) of two frame deltas.

    Both deltas live in the frame at the start of the interval; the heading
    difference is wrapped.
    """
    return EstimationError(
        true_delta.x - est_delta.x,
        true_delta.y - est_delta.y,
        wrap_angle(true_delta.theta - est_delta.theta),
    )


def integrate_twists(twists: Iterable[tuple[float, float]], dt: float) -> Pose2:
    """Compose a chain of per-tick constant twists starting from the identity."""
    pose = Pose2(0.0, 0.0, 0.0)
    for v, w in twists:
        pose = constant_twist_step(pose, v, w, dt)
    return pose
