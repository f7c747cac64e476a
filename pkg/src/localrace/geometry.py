"""2D geometry primitives, polyline helpers and the arc-length cubic spline.

Points and polylines are handled as numpy arrays of shape ``(N, 2)`` inside the
package; :class:`Point2` and :class:`Pose2` are the light public value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInput, OutOfRange, TooFewPoints

MIN_SEPARATION = 1e-9

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


class Point2(NamedTuple):
    x: float
    y: float


class Pose2(NamedTuple):
    x: float
    y: float
    psi: float

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)


@dataclass(frozen=True)
class ControlPoint:
    position: Point2
    psi_cp: float
    kappa: float
    s: float


def normalize_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    return -((-np.asarray(theta, dtype=float) + math.pi) % (2.0 * math.pi) - math.pi)


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DegenerateInput(f"expected an (N, 2) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DegenerateInput("non-finite coordinates")
    return arr


def validate_polyline(points) -> np.ndarray:
    """Return ``points`` as an array after checking the polyline invariants."""
    arr = as_points(points)
    if len(arr) < 2:
        raise TooFewPoints(f"a polyline needs at least 2 points, got {len(arr)}")
    gaps = np.hypot(*np.diff(arr, axis=0).T)
    if np.any(gaps <= MIN_SEPARATION):
        raise DegenerateInput("duplicate consecutive points")
    return arr


def segment_lengths(points: np.ndarray) -> np.ndarray:
    d = np.diff(points, axis=0)
    return np.hypot(d[:, 0], d[:, 1])


def cumulative_length(points: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(segment_lengths(points))))


def polyline_length(points: np.ndarray) -> float:
    return float(segment_lengths(points).sum()) if len(points) > 1 else 0.0


def drop_duplicates(points: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Remove points closer than ``tol`` to their kept predecessor."""
    if len(points) < 2:
        return points
    keep = [0]
    last = points[0]
    for i in range(1, len(points)):
        if math.hypot(points[i, 0] - last[0], points[i, 1] - last[1]) > tol:
            keep.append(i)
            last = points[i]
    return points[keep]


def resample_polyline(points: np.ndarray, spacing: float) -> np.ndarray:
    """Resample a polyline at constant arc spacing; the last point is always kept."""
    s = cumulative_length(points)
    total = s[-1]
    if total <= 0.0:
        return points[:1].copy()
    n = max(int(math.floor(total / spacing)), 1)
    targets = np.arange(n + 1) * spacing
    if total - targets[-1] > 1e-6:
        targets = np.append(targets, total)
    else:
        targets[-1] = total
    x = np.interp(targets, s, points[:, 0])
    y = np.interp(targets, s, points[:, 1])
    return np.column_stack((x, y))


def vertex_tangents(points: np.ndarray, closed: bool = False, span: int = 1) -> np.ndarray:
    """Unit tangents at vertices from differences ``span`` vertices either side.

    Open ends use the nearest available vertices (one-sided at the very ends).
    """
    n = len(points)
    idx = np.arange(n)
    if closed:
        d = points[(idx + span) % n] - points[(idx - span) % n]
    else:
        d = points[np.minimum(idx + span, n - 1)] - points[np.maximum(idx - span, 0)]
    norm = np.hypot(d[:, 0], d[:, 1])
    norm[norm == 0.0] = 1.0
    return d / norm[:, None]


def left_normals(tangents: np.ndarray) -> np.ndarray:
    return np.column_stack((-tangents[:, 1], tangents[:, 0]))


def rotate(points: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return points @ np.array([[c, s], [-s, c]])


def to_frame(points: np.ndarray, pose: Pose2) -> np.ndarray:
    """Express world points in the local frame of ``pose``."""
    return rotate(points - np.array([pose.x, pose.y]), -pose.psi)


def from_frame(points: np.ndarray, pose: Pose2) -> np.ndarray:
    return rotate(points, pose.psi) + np.array([pose.x, pose.y])


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Pose ``b`` (given in frame ``a``) expressed in the parent frame of ``a``."""
    c, s = math.cos(a.psi), math.sin(a.psi)
    return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, normalize_angle(a.psi + b.psi))


def relative(a: Pose2, b: Pose2) -> Pose2:
    """Pose ``b`` expressed in the frame of pose ``a`` (both in the same parent)."""
    c, s = math.cos(a.psi), math.sin(a.psi)
    dx, dy = b.x - a.x, b.y - a.y
    return Pose2(c * dx + s * dy, -s * dx + c * dy, normalize_angle(b.psi - a.psi))


def segments_intersect(p1, p2, q1, q2, eps: float = 1e-12) -> np.ndarray:
    """Vectorized closed segment intersection test (touching counts).

    All arguments broadcast against each other with a trailing axis of size 2.
    """
    def cross(o, a, b):
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (
            b[..., 0] - o[..., 0]
        )

    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    proper = (d1 * d2 < -eps * eps) & (d3 * d4 < -eps * eps)

    def on_segment(a, b, c, d):
        return (np.abs(d) <= eps) & (
            np.minimum(a[..., 0], b[..., 0]) - eps <= c[..., 0]
        ) & (c[..., 0] <= np.maximum(a[..., 0], b[..., 0]) + eps) & (
            np.minimum(a[..., 1], b[..., 1]) - eps <= c[..., 1]
        ) & (c[..., 1] <= np.maximum(a[..., 1], b[..., 1]) + eps)

    touch = (
        on_segment(q1, q2, p1, d1)
        | on_segment(q1, q2, p2, d2)
        | on_segment(p1, p2, q1, d3)
        | on_segment(p1, p2, q2, d4)
    )
    return proper | touch


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = np.einsum("...i,...i->...", ab, ab)
    denom = np.where(denom == 0.0, 1.0, denom)
    t = np.clip(np.einsum("...i,...i->...", p - a, ab) / denom, 0.0, 1.0)
    foot = a + t[..., None] * ab
    return np.linalg.norm(p - foot, axis=-1)


# ---------------------------------------------------------------------------
# Spline


@dataclass(frozen=True, eq=False)
class PathSpline:
    """Natural cubic spline through planar points, queried by arc length.

    The curve is built on a chord-length parameter ``t``; ``coef_x[i]`` holds
    ``(a, b, c, d)`` for ``x(t) = a + b u + c u^2 + d u^3`` with ``u = t - t_knots[i]``.
    ``s_knots`` are the true arc positions of the knots.
    """

    points: np.ndarray
    t_knots: np.ndarray
    coef_x: np.ndarray
    coef_y: np.ndarray
    s_knots: np.ndarray

    @property
    def total_length(self) -> float:
        return float(self.s_knots[-1])

    @property
    def n_segments(self) -> int:
        return len(self.t_knots) - 1

    def _derivs(self, seg: np.ndarray, u: np.ndarray):
        cx = self.coef_x[seg]
        cy = self.coef_y[seg]
        x = cx[:, 0] + u * (cx[:, 1] + u * (cx[:, 2] + u * cx[:, 3]))
        y = cy[:, 0] + u * (cy[:, 1] + u * (cy[:, 2] + u * cy[:, 3]))
        dx = cx[:, 1] + u * (2.0 * cx[:, 2] + 3.0 * u * cx[:, 3])
        dy = cy[:, 1] + u * (2.0 * cy[:, 2] + 3.0 * u * cy[:, 3])
        ddx = 2.0 * cx[:, 2] + 6.0 * u * cx[:, 3]
        ddy = 2.0 * cy[:, 2] + 6.0 * u * cy[:, 3]
        return x, y, dx, dy, ddx, ddy

    def _speed(self, seg: np.ndarray, u: np.ndarray) -> np.ndarray:
        cx = self.coef_x[seg]
        cy = self.coef_y[seg]
        dx = cx[..., 1] + u * (2.0 * cx[..., 2] + 3.0 * u * cx[..., 3])
        dy = cy[..., 1] + u * (2.0 * cy[..., 2] + 3.0 * u * cy[..., 3])
        return np.hypot(dx, dy)

    def _arc(self, seg: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Arc length from the start of segment ``seg`` to local parameter ``u``."""
        half = 0.5 * u[:, None]
        nodes = half * (_GL_NODES[None, :] + 1.0)
        speed = self._speed(np.broadcast_to(seg[:, None], nodes.shape), nodes)
        return half[:, 0] * (speed @ _GL_WEIGHTS)

    def locate(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Map arc positions to ``(segment index, local chord parameter)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        seg = np.clip(np.searchsorted(self.s_knots, s, side="right") - 1, 0, self.n_segments - 1)
        h = self.t_knots[seg + 1] - self.t_knots[seg]
        seg_len = self.s_knots[seg + 1] - self.s_knots[seg]
        target = s - self.s_knots[seg]
        u = np.clip(target * h / seg_len, 0.0, h)
        at_end = target >= seg_len
        for _ in range(8):
            err = self._arc(seg, u) - target
            if np.all(np.abs(err) < 1e-13):
                break
            u = np.clip(u - err / np.maximum(self._speed(seg, u), 1e-12), 0.0, h)
        u = np.where(target <= 0.0, 0.0, u)
        u = np.where(at_end, h, u)
        return seg, u

    def evaluate(self, s) -> dict[str, np.ndarray]:
        """Vectorized evaluation: position, heading and signed curvature at ``s``."""
        seg, u = self.locate(s)
        x, y, dx, dy, ddx, ddy = self._derivs(seg, u)
        speed2 = dx * dx + dy * dy
        return {
            "x": x,
            "y": y,
            "psi": np.arctan2(dy, dx),
            "kappa": (dx * ddy - dy * ddx) / speed2**1.5,
        }

    def positions(self, s) -> np.ndarray:
        seg, u = self.locate(s)
        x, y, *_ = self._derivs(seg, u)
        return np.column_stack((x, y))

    def curvature(self, s) -> np.ndarray:
        return self.evaluate(s)["kappa"]


def _natural_second_derivatives(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Second derivatives at knots of the natural cubic interpolant (Thomas algorithm)."""
    n = len(t)
    h = np.diff(t)
    m = np.zeros(n)
    if n < 3:
        return m
    size = n - 2
    sub = h[1:-1].copy()
    diag = 2.0 * (h[:-1] + h[1:])
    sup = h[1:-1].copy()
    slope = np.diff(v) / h
    rhs = 6.0 * (slope[1:] - slope[:-1])
    cp = np.empty(size)
    dp = np.empty(size)
    cp[0] = sup[0] / diag[0] if size > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, size):
        denom = diag[i] - sub[i - 1] * cp[i - 1]
        cp[i] = sup[i] / denom if i < size - 1 else 0.0
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / denom
    inner = np.empty(size)
    inner[-1] = dp[-1]
    for i in range(size - 2, -1, -1):
        inner[i] = dp[i] - cp[i] * inner[i + 1]
    m[1:-1] = inner
    return m


def _coefficients(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    m = _natural_second_derivatives(t, v)
    h = np.diff(t)
    a = v[:-1]
    b = np.diff(v) / h - h * (2.0 * m[:-1] + m[1:]) / 6.0
    c = m[:-1] / 2.0
    d = np.diff(m) / (6.0 * h)
    return np.column_stack((a, b, c, d))


def fit_spline(points) -> PathSpline:
    """Fit a natural cubic C2 spline through ``points``, re-indexed by arc length."""
    pts = as_points(points)
    if len(pts) < 3:
        raise TooFewPoints(f"spline fit needs at least 3 points, got {len(pts)}")
    chords = segment_lengths(pts)
    if np.any(chords <= MIN_SEPARATION):
        raise DegenerateInput("duplicate consecutive points")
    t = np.concatenate(([0.0], np.cumsum(chords)))
    spline = PathSpline(
        points=pts.copy(),
        t_knots=t,
        coef_x=_coefficients(t, pts[:, 0]),
        coef_y=_coefficients(t, pts[:, 1]),
        s_knots=t,
    )
    seg = np.arange(len(chords))
    arc = spline._arc(seg, chords)
    s_knots = np.concatenate(([0.0], np.cumsum(arc)))
    for arr in (spline.points, t, spline.coef_x, spline.coef_y, s_knots):
        arr.setflags(write=False)
    return PathSpline(spline.points, t, spline.coef_x, spline.coef_y, s_knots)


def eval_spline(spline: PathSpline, s: float) -> ControlPoint:
    if not (0.0 <= s <= spline.total_length) or not math.isfinite(s):
        raise OutOfRange(f"s={s} outside [0, {spline.total_length}]")
    e = spline.evaluate(s)
    return ControlPoint(
        position=Point2(float(e["x"][0]), float(e["y"][0])),
        psi_cp=float(normalize_angle(float(e["psi"][0]))),
        kappa=float(e["kappa"][0]),
        s=float(s),
    )


def knot_control_points(spline: PathSpline) -> list[ControlPoint]:
    """Control points at every knot of the spline."""
    e = spline.evaluate(spline.s_knots)
    return [
        ControlPoint(Point2(float(x), float(y)), float(normalize_angle(float(p))), float(k), float(s))
        for x, y, p, k, s in zip(e["x"], e["y"], e["psi"], e["kappa"], spline.s_knots)
    ]


COARSE_STEP = 0.05
REFINE_TOL = 1e-4


def project_to_spline(spline: PathSpline, p) -> float:
    """Arc position of the point on ``spline`` closest to ``p``.

    Coarse sampling at ``COARSE_STEP`` followed by successive 10x finer local
    grids until the bracket is below ``REFINE_TOL``. Ties go to the smaller s.
    """
    px, py = float(p[0]), float(p[1])
    total = spline.total_length
    n = int(math.ceil(total / COARSE_STEP)) + 1
    s = np.linspace(0.0, total, n)
    step = total / (n - 1)
    while True:
        xy = spline.positions(s)
        d2 = (xy[:, 0] - px) ** 2 + (xy[:, 1] - py) ** 2
        best = float(s[int(np.argmin(d2))])
        if step < REFINE_TOL:
            return best
        lo, hi = max(0.0, best - step), min(total, best + step)
        step = step / 10.0
        s = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
