"""Independent reference computations used to check the package."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar


def relaxed_velocity_profile(xyk: np.ndarray, v_seed: float, limits, tol: float = 1e-12, max_sweeps: int = 100000):
    """Fixed point of repeatedly enforcing every pairwise acceleration bound.

    Starts from the per-point upper bounds (speed cap, curvature cap, the
    seed at the first point and v_min at the last) and lowers values until no
    constraint is violated; Jacobi sweeps, no forward/backward structure.
    """
    xyk = np.asarray(xyk, dtype=float)
    n = len(xyk)
    gaps = np.hypot(*np.diff(xyk[:, :2], axis=0).T)
    upper = np.full(n, limits.v_max)
    k = np.abs(xyk[:, 2])
    nz = k > 0
    upper[nz] = np.minimum(upper[nz], np.sqrt(limits.a_y_max / k[nz]))
    upper[0] = min(upper[0], min(max(v_seed, limits.v_min), limits.v_max))
    upper[-1] = min(upper[-1], limits.v_min)
    v = np.maximum(upper, limits.v_min)
    for _ in range(max_sweeps):
        fwd = np.sqrt(v[:-1] ** 2 + 2.0 * gaps * limits.a_x_max)
        bwd = np.sqrt(v[1:] ** 2 + 2.0 * gaps * limits.a_x_min)
        new = v.copy()
        new[1:] = np.minimum(new[1:], fwd)
        new[:-1] = np.minimum(new[:-1], bwd)
        new = np.maximum(new, limits.v_min)
        if np.max(np.abs(new - v)) <= tol:
            return new
        v = new
    raise RuntimeError("relaxation did not converge")


class ScipyCurve:
    """Natural cubic through the points on a chord-length parameter, via scipy."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        self.t = np.concatenate(([0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))))
        self.cs = CubicSpline(self.t, pts, bc_type="natural")
        self.d1 = self.cs.derivative(1)
        self.d2 = self.cs.derivative(2)

    def arc(self, t: float) -> float:
        """Arc length from the start to parameter ``t`` by adaptive quadrature, knot by knot."""
        total = 0.0
        for a, b in zip(self.t[:-1], self.t[1:]):
            hi = min(b, t)
            if hi <= a:
                break
            total += quad(lambda u: float(np.hypot(*self.d1(u))), a, hi, epsabs=1e-13, epsrel=1e-13)[0]
        return total

    def curvature(self, t: float) -> float:
        dx, dy = self.d1(t)
        ddx, ddy = self.d2(t)
        return float((dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5)

    def heading(self, t: float) -> float:
        dx, dy = self.d1(t)
        return math.atan2(dy, dx)


def brute_force_projection(spline, p, step: float = 1e-3) -> float:
    """Closest arc position: dense uniform grid, then bounded scalar minimisation."""
    s = np.linspace(0.0, spline.total_length, int(math.ceil(spline.total_length / step)) + 1)
    xy = spline.positions(s)
    d2 = (xy[:, 0] - p[0]) ** 2 + (xy[:, 1] - p[1]) ** 2
    best = float(s[int(np.argmin(d2))])
    lo, hi = max(0.0, best - 2 * step), min(spline.total_length, best + 2 * step)

    def dist2(q):
        x, y = spline.positions(q)[0]
        return (x - p[0]) ** 2 + (y - p[1]) ** 2

    res = minimize_scalar(dist2, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    return float(res.x) if res.fun <= dist2(best) else best


def circle_points(radius: float, n: int, center=(0.0, 0.0), start: float = 0.0, sweep: float = 2 * math.pi):
    th = start + np.linspace(0.0, sweep, n)
    return np.column_stack((center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)))
