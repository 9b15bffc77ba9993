"""Arc-length parametrized reference line for Frenet-frame planning.

The heading is a monotone cubic (PCHIP) interpolant over waypoint arc
length, so the reconstructed curve is exactly unit-speed: position is the
integral of (cos theta, sin theta), evaluated with per-segment
Gauss-Legendre quadrature against a dense cached grid, and curvature is the
analytic derivative of the heading interpolant. That keeps positions,
headings and curvatures mutually consistent to float precision, which the
round-trip guarantees of the Frenet conversions rely on.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

# 5-point Gauss-Legendre nodes/weights on [0, 1]
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


class ReferenceLine:
    """Smooth centerline with pose/curvature lookups and point projection."""

    def __init__(self, waypoints, max_cell: float = 0.5):
        wp = np.asarray(waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 2 or wp.shape[0] < 2:
            raise ValueError("waypoints must be an (N, 2) array with N >= 2")
        if not np.all(np.isfinite(wp)):
            raise ValueError("waypoints must be finite")
        seg = np.diff(wp, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len < 1e-9):
            raise ValueError("consecutive waypoints must be distinct")
        s_knots = np.concatenate([[0.0], np.cumsum(seg_len)])

        # waypoint headings from symmetric chords (one-sided at the ends)
        fwd = np.empty_like(wp)
        fwd[0] = seg[0]
        fwd[-1] = seg[-1]
        if wp.shape[0] > 2:
            fwd[1:-1] = wp[2:] - wp[:-2]
        theta = np.unwrap(np.arctan2(fwd[:, 1], fwd[:, 0]))

        self._theta = PchipInterpolator(s_knots, theta, extrapolate=True)
        self._dtheta = self._theta.derivative(1)
        self._d2theta = self._theta.derivative(2)
        self._length = float(s_knots[-1])
        self._origin = wp[0].copy()

        # dense position grid: subdivide each knot interval so every
        # quadrature cell sees a single cubic heading piece
        cells = [np.array([0.0])]
        for s0, s1 in zip(s_knots[:-1], s_knots[1:]):
            n = max(1, int(np.ceil((s1 - s0) / max_cell)))
            cells.append(np.linspace(s0, s1, n + 1)[1:])
        s_grid = np.concatenate(cells)
        widths = np.diff(s_grid)
        nodes = s_grid[:-1, None] + widths[:, None] * _GL_NODES[None, :]
        th = self._theta(nodes)
        dx = widths * (np.cos(th) @ _GL_WEIGHTS)
        dy = widths * (np.sin(th) @ _GL_WEIGHTS)
        xy = np.empty((s_grid.size, 2))
        xy[0] = self._origin
        xy[1:, 0] = self._origin[0] + np.cumsum(dx)
        xy[1:, 1] = self._origin[1] + np.cumsum(dy)
        self._s_grid = s_grid
        self._xy_grid = xy

    @property
    def length(self) -> float:
        return self._length

    def heading_at(self, s):
        return self._theta(s)

    def curvature_at(self, s):
        return self._dtheta(s)

    def curvature_rate_at(self, s):
        return self._d2theta(s)

    def point_at(self, s):
        """Position on the line at arc length s (scalar or array)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.clip(np.searchsorted(self._s_grid, s_arr, side="right") - 1, 0,
                      self._s_grid.size - 2)
        base_s = self._s_grid[idx]
        width = s_arr - base_s
        nodes = base_s[:, None] + width[:, None] * _GL_NODES[None, :]
        th = self._theta(nodes)
        x = self._xy_grid[idx, 0] + width * (np.cos(th) @ _GL_WEIGHTS)
        y = self._xy_grid[idx, 1] + width * (np.sin(th) @ _GL_WEIGHTS)
        out = np.stack([x, y], axis=-1)
        return out[0] if np.isscalar(s) or np.asarray(s).ndim == 0 else out

    def offset_point(self, s, d):
        """Position at arc length s displaced d to the left of the line."""
        p = np.atleast_2d(self.point_at(s))
        th = np.atleast_1d(self._theta(s))
        out = p + np.stack([-np.sin(th), np.cos(th)], axis=-1) * np.atleast_1d(d)[:, None]
        return out[0] if np.asarray(s).ndim == 0 else out

    def project(self, x, y, iterations: int = 12):
        """Arc length and signed lateral offset of the nearest curve point.

        Returns (s, d) with d positive to the left. Works on scalars or
        equal-length arrays. s is clamped to [0, length]; callers that
        require an interior foot point should check ``on_domain``.
        """
        q = np.stack([np.atleast_1d(np.asarray(x, dtype=float)),
                      np.atleast_1d(np.asarray(y, dtype=float))], axis=-1)
        d2 = ((self._xy_grid[None, :, :] - q[:, None, :]) ** 2).sum(axis=-1)
        s = self._s_grid[np.argmin(d2, axis=1)].astype(float)
        for _ in range(iterations):
            p = np.atleast_2d(self.point_at(s))
            th = np.atleast_1d(self._theta(s))
            tx, ty = np.cos(th), np.sin(th)
            rx, ry = p[:, 0] - q[:, 0], p[:, 1] - q[:, 1]
            g = rx * tx + ry * ty
            kappa = np.atleast_1d(self._dtheta(s))
            dperp = -(rx * -ty + ry * tx)  # (q - p) . normal
            gp = 1.0 - kappa * dperp
            step = np.where(np.abs(gp) > 1e-9, g / np.where(gp == 0.0, 1.0, gp), g)
            s = np.clip(s - step, 0.0, self._length)
            if np.max(np.abs(step)) < 1e-10:
                break
        p = np.atleast_2d(self.point_at(s))
        th = np.atleast_1d(self._theta(s))
        d = (q[:, 0] - p[:, 0]) * -np.sin(th) + (q[:, 1] - p[:, 1]) * np.cos(th)
        if np.asarray(x).ndim == 0:
            return float(s[0]), float(d[0])
        return s, d

    def on_domain(self, x, y, tol: float = 1e-6) -> bool:
        """True when (x, y) projects strictly inside the parametrized span."""
        s, _ = self.project(x, y)
        if s <= 0.0 + 1e-12 or s >= self._length - 1e-12:
            p = self.point_at(s)
            th = float(self._theta(s))
            g = (p[0] - x) * np.cos(th) + (p[1] - y) * np.sin(th)
            return bool(abs(g) <= tol)
        return True
