"""Boundary-value polynomial fits used by the sampling planner."""

from __future__ import annotations

import numpy as np

_MIN_DURATION = 1e-6


def _check_duration(duration: float) -> None:
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if duration < _MIN_DURATION:
        raise ValueError(f"duration {duration:g} is below the {_MIN_DURATION:g} s minimum")


def fit_quintic(
    p0: float, v0: float, a0: float, p1: float, v1: float, a1: float, duration: float
) -> np.ndarray:
    """Unique degree-5 polynomial matching position/velocity/acceleration at
    both ends of [0, duration]. Returns coefficients, lowest order first."""
    _check_duration(duration)
    t = duration
    c0, c1, c2 = p0, v0, 0.5 * a0
    t2, t3, t4, t5 = t * t, t**3, t**4, t**5
    m = np.array(
        [
            [t3, t4, t5],
            [3.0 * t2, 4.0 * t3, 5.0 * t4],
            [6.0 * t, 12.0 * t2, 20.0 * t3],
        ]
    )
    b = np.array(
        [
            p1 - (c0 + c1 * t + c2 * t2),
            v1 - (c1 + 2.0 * c2 * t),
            a1 - 2.0 * c2,
        ]
    )
    c3, c4, c5 = np.linalg.solve(m, b)
    return np.array([c0, c1, c2, c3, c4, c5])


def fit_quartic(
    p0: float, v0: float, a0: float, v1: float, a1: float, duration: float
) -> np.ndarray:
    """Degree-4 polynomial with fixed start state and free terminal position
    (terminal velocity and acceleration prescribed)."""
    _check_duration(duration)
    t = duration
    c0, c1, c2 = p0, v0, 0.5 * a0
    m = np.array(
        [
            [3.0 * t * t, 4.0 * t**3],
            [6.0 * t, 12.0 * t * t],
        ]
    )
    b = np.array([v1 - (c1 + 2.0 * c2 * t), a1 - 2.0 * c2])
    c3, c4 = np.linalg.solve(m, b)
    return np.array([c0, c1, c2, c3, c4])


def _derive(coeffs: np.ndarray, order: int) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    for _ in range(order):
        if c.size <= 1:
            return np.zeros(1)
        c = c[1:] * np.arange(1, c.size)
    return c


def poly_eval(coeffs: np.ndarray, t, order: int = 0):
    """Evaluate a coefficient array (or its order-th derivative) at t."""
    c = _derive(coeffs, order) if order else np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, c[-1])
    for a in c[-2::-1]:
        out = out * t + a
    return out[()] if out.ndim == 0 else out


def jerk_sq_integral(coeffs: np.ndarray, duration: float) -> float:
    """Closed-form integral of the squared third derivative over [0, duration]."""
    b = _derive(coeffs, 3)
    total = 0.0
    for i in range(b.size):
        if b[i] == 0.0:
            continue
        for j in range(b.size):
            if b[j] != 0.0:
                k = i + j + 1
                total += b[i] * b[j] * duration**k / k
    return float(total)
