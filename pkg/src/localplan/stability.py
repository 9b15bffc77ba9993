"""Per-step boundedness monitoring for the planning orbit.

The monitored system is x_k = x_{k-1} + rho_k where x is the ego state
relative to a fixed terminal state and rho combines the planned step with
the per-frame estimation error. A quadratic certificate V tracks whether
steps shrink the distance to the terminal state, and trace analysis reports
the empirical radius inside which the orbit ends up confined.

toy_orbit_sim drives the same record/analysis machinery from a synthetic
contracting process, independent of the planning stack, so the two can
cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

_IDENTITY_W = (1.0, 1.0, 1.0)


def _weights_vec(weights) -> np.ndarray:
    w = np.asarray(_IDENTITY_W if weights is None else weights, dtype=float)
    if w.shape != (3,):
        raise ValueError("weights must be a 3-vector")
    if np.any(w <= 0.0):
        raise ValueError("weights must be positive")
    return w


def lyapunov_value(x, weights=None) -> float:
    """V(x) = sum_i w_i * x_i^2 ; zero only at the terminal state."""
    w = _weights_vec(weights)
    x = np.asarray(x, dtype=float)
    return float(np.dot(w, x * x))


def delta_v(x, rho, weights=None) -> float:
    """Change of V along one step: (2x + rho)^T W rho.

    Algebraically identical to lyapunov_value(x + rho) - lyapunov_value(x).
    """
    w = _weights_vec(weights)
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    return float(np.dot(2.0 * x + rho, w * rho))


def check_convergence_condition(x, rho, weights=None) -> tuple[bool, bool]:
    """Flags (x^T W rho <= 0, rho^T W rho < -2 x^T W rho).

    Both true (with rho != 0) is sufficient for delta_v < 0.
    """
    w = _weights_vec(weights)
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    xr = float(np.dot(x, w * rho))
    rr = float(np.dot(rho, w * rho))
    return (xr <= 0.0, rr < -2.0 * xr)


@dataclass(frozen=True)
class StabilityRecord:
    """One monitored step. V is evaluated at the post-step state x_prev + rho."""

    k: int
    x_prev: np.ndarray
    planned_step: np.ndarray
    epsilon: np.ndarray
    rho: np.ndarray
    V: float
    delta_V: float
    cond_inner: bool
    cond_norm: bool


def make_record(k, x_prev, planned_step, epsilon, weights=None) -> StabilityRecord:
    x_prev = np.asarray(x_prev, dtype=float)
    planned_step = np.asarray(planned_step, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    rho = planned_step + epsilon
    inner, norm_ok = check_convergence_condition(x_prev, rho, weights)
    return StabilityRecord(
        k=int(k),
        x_prev=x_prev,
        planned_step=planned_step,
        epsilon=epsilon,
        rho=rho,
        V=lyapunov_value(x_prev + rho, weights),
        delta_V=delta_v(x_prev, rho, weights),
        cond_inner=inner,
        cond_norm=norm_ok,
    )


@dataclass(frozen=True)
class StabilityBounds:
    rho_bar: float
    eta_hat: float
    containment_radius: float
    entry_step: Optional[int]
    contained: bool


def analyze_trace(records: Sequence[StabilityRecord]) -> StabilityBounds:
    """Empirical bounds over a monitored trace.

    rho_bar bounds the step size; eta_hat is the largest pre-step distance
    at which a V-increase was still observed (0 if none). Both reported
    values are taken over the full trace.

    The contained flag is a falsifiable check of the eventual-boundedness
    claim: the same bounds are also accumulated online, and the radius
    estimate is frozen at the first state that lies strictly inside the
    ball known at that moment (the terminal state itself always counts as
    inside). The orbit is contained when every later state stays inside
    that frozen ball. Estimating the radius from the whole trace instead
    would be vacuous — the final bounds cover every state after the first
    by construction — so a trace whose radius estimate keeps growing (a
    diffusing orbit) is correctly reported as not contained.
    """
    if len(records) == 0:
        raise ValueError("empty trace")
    rho_norms = [float(np.linalg.norm(r.rho)) for r in records]
    rho_bar = max(rho_norms)
    up_norms = [
        float(np.linalg.norm(r.x_prev)) for r in records if r.delta_V > 0.0
    ]
    eta_hat = max(up_norms) if up_norms else 0.0
    radius = eta_hat + rho_bar

    norms = [float(np.linalg.norm(records[0].x_prev))]
    norms += [float(np.linalg.norm(r.x_prev + r.rho)) for r in records]

    def inside(n: float, r: float) -> bool:
        return n < r or n == 0.0

    entry: Optional[int] = None
    frozen = 0.0
    run_rho = 0.0
    run_eta = 0.0
    for i, n in enumerate(norms):
        # bounds known before state i use records 0..i-1
        if inside(n, run_rho + run_eta):
            entry = i
            frozen = run_rho + run_eta
            break
        if i < len(records):
            rec = records[i]
            run_rho = max(run_rho, rho_norms[i])
            if rec.delta_V > 0.0:
                run_eta = max(run_eta, float(np.linalg.norm(rec.x_prev)))
    if entry is None:
        return StabilityBounds(rho_bar, eta_hat, radius, None, False)
    if all(inside(n, frozen) for n in norms[entry + 1 :]):
        return StabilityBounds(rho_bar, eta_hat, radius, entry, True)
    return StabilityBounds(rho_bar, eta_hat, radius, entry, False)


def toy_orbit_sim(
    x0,
    step_gain: float,
    step_cap: float,
    eps_bound: float,
    n_steps: int,
    rng_seed,
    weights=None,
) -> list[StabilityRecord]:
    """Synthetic orbit: planned steps point straight at the terminal state.

    planned = -min(step_gain*||x||, step_cap) * x/||x||, plus a disturbance
    drawn uniformly from the ball of radius eps_bound. States live in plain
    R^3 (no angle wrapping) so the analysis matches the system definition
    exactly.
    """
    if not (0.0 < step_gain <= 1.0):
        raise ValueError("step_gain must be in (0, 1]")
    if step_cap <= 0.0:
        raise ValueError("step_cap must be positive")
    if eps_bound < 0.0:
        raise ValueError("eps_bound must be nonnegative")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = (
        rng_seed
        if isinstance(rng_seed, np.random.Generator)
        else np.random.default_rng(rng_seed)
    )
    x = np.array(x0, dtype=float)
    if x.shape != (3,):
        raise ValueError("x0 must be a 3-vector")
    records: list[StabilityRecord] = []
    for k in range(1, n_steps + 1):
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            planned = np.zeros(3)
        else:
            planned = (-min(step_gain * nrm, step_cap) / nrm) * x
        if eps_bound > 0.0:
            direction = rng.normal(size=3)
            dn = float(np.linalg.norm(direction))
            if dn == 0.0:
                eps = np.zeros(3)
            else:
                eps = direction / dn * (eps_bound * rng.uniform() ** (1.0 / 3.0))
        else:
            eps = np.zeros(3)
        rec = make_record(k, x.copy(), planned, eps, weights)
        records.append(rec)
        x = x + rec.rho
    return records
