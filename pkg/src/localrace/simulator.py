"""Deterministic 2D racing world: kinematic bicycle, wall ray casting, laps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InvalidDt, InvalidParams, SelfIntersectingWalls
from .geometry import Pose2, compose, left_normals, normalize_angle, segments_intersect, vertex_tangents

MAX_SUBSTEP = 0.01


@dataclass(frozen=True, eq=False)
class Track:
    """Closed centerline loop; the last vertex joins the first."""

    centerline: np.ndarray
    width: np.ndarray
    name: str = "track"
    start_index: int = 0

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise InvalidParams("track centerline must be an (N>=3, 2) array")
        if np.hypot(*(pts[-1] - pts[0])) < 1e-9:
            pts = pts[:-1]
        width = np.broadcast_to(np.asarray(self.width, dtype=float), (len(pts),)).copy()
        if not np.all(width > 0):
            raise InvalidParams("track width must be positive everywhere")
        if np.hypot(*(pts[-1] - pts[0])) >= width[-1] / 2.0:
            raise InvalidParams("centerline is not closed (last vertex too far from the first)")
        if not 0 <= self.start_index < len(pts):
            raise InvalidParams(f"start_index {self.start_index} outside 0..{len(pts) - 1}")
        pts.setflags(write=False)
        width.setflags(write=False)
        object.__setattr__(self, "centerline", pts)
        object.__setattr__(self, "width", width)

    @property
    def length(self) -> float:
        d = np.diff(np.vstack((self.centerline, self.centerline[:1])), axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    def start_pose(self) -> Pose2:
        t = vertex_tangents(self.centerline, closed=True)[self.start_index]
        x, y = self.centerline[self.start_index]
        return Pose2(float(x), float(y), float(math.atan2(t[1], t[0])))


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.33
    track_halfwidth_footprint: float = 0.15
    length_footprint: float = 0.50
    delta_max: float = 0.40
    tau_delta: float = 0.10
    tau_v: float = 0.30
    a_cmd_max: float = 6.0

    def __post_init__(self):
        for name in ("wheelbase", "track_halfwidth_footprint", "length_footprint", "delta_max", "tau_delta", "tau_v", "a_cmd_max"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be positive")
        if self.delta_max >= math.pi / 2:
            raise InvalidParams("delta_max must be below pi/2")

    @property
    def width(self) -> float:
        return 2.0 * self.track_halfwidth_footprint


@dataclass(frozen=True)
class SensorConfig:
    fov: float = math.radians(270.0)
    angular_increment: float = math.radians(0.25)
    max_range: float = 30.0
    noise_sigma: float = 0.01
    mount_offset: Pose2 = Pose2(0.27, 0.0, 0.0)

    def __post_init__(self):
        ratio = self.fov / self.angular_increment
        if abs(ratio - round(ratio)) > 1e-6:
            raise InvalidParams("fov / angular_increment must be an integer")
        if not self.max_range > 0 or self.noise_sigma < 0:
            raise InvalidParams("max_range must be positive and noise_sigma non-negative")

    @property
    def n_beams(self) -> int:
        return int(round(self.fov / self.angular_increment)) + 1

    @property
    def angle_min(self) -> float:
        return -self.fov / 2.0

    @property
    def no_return(self) -> float:
        return self.max_range + 1.0


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2
    v: float = 0.0
    yaw_rate: float = 0.0
    delta_measured: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class ControlCommand:
    delta_target: float
    v_target: float


@dataclass(frozen=True, eq=False)
class LidarScan:
    angle_min: float
    angular_increment: float
    ranges: np.ndarray
    max_range: float
    t: float = 0.0

    @property
    def angles(self) -> np.ndarray:
        return self.angle_min + self.angular_increment * np.arange(len(self.ranges))

    @property
    def no_return(self) -> float:
        return self.max_range + 1.0


@dataclass(frozen=True)
class LapEvent:
    fraction: float
    time: float


# ---------------------------------------------------------------------------
# Walls


def _check_wall(wall: np.ndarray, center: np.ndarray) -> None:
    edges = np.roll(wall, -1, axis=0) - wall
    c_edges = np.roll(center, -1, axis=0) - center
    if np.any(np.einsum("ij,ij->i", edges, c_edges) <= 0.0):
        raise SelfIntersectingWalls("offset wall folds back on itself")


def _closed_segments(poly: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return poly, np.roll(poly, -1, axis=0)


def _any_crossing(a0, a1, b0, b1, skip_adjacent: bool) -> bool:
    n, m = len(a0), len(b0)
    lo = np.minimum(a0, a1)
    hi = np.maximum(a0, a1)
    blo = np.minimum(b0, b1)
    bhi = np.maximum(b0, b1)
    for start in range(0, n, 256):
        sl = slice(start, min(start + 256, n))
        overlap = (
            (lo[sl, None, 0] <= bhi[None, :, 0])
            & (blo[None, :, 0] <= hi[sl, None, 0])
            & (lo[sl, None, 1] <= bhi[None, :, 1])
            & (blo[None, :, 1] <= hi[sl, None, 1])
        )
        if skip_adjacent:
            i = np.arange(sl.start, sl.stop)[:, None]
            j = np.arange(m)[None, :]
            gap = np.abs(i - j)
            overlap &= (gap > 1) & (gap < n - 1)
        ii, jj = np.nonzero(overlap)
        if len(ii) and np.any(segments_intersect(a0[sl][ii], a1[sl][ii], b0[jj], b1[jj])):
            return True
    return False


def build_walls(track: Track) -> tuple[np.ndarray, np.ndarray]:
    """Left and right walls as closed polylines (no repeated first vertex)."""
    pts = track.centerline
    normals = left_normals(vertex_tangents(pts, closed=True))
    half = (track.width / 2.0)[:, None]
    left = pts + half * normals
    right = pts - half * normals
    for wall in (left, right):
        _check_wall(wall, pts)
        if _any_crossing(*_closed_segments(wall), *_closed_segments(wall), skip_adjacent=True):
            raise SelfIntersectingWalls("wall polyline crosses itself")
    if _any_crossing(*_closed_segments(left), *_closed_segments(right), skip_adjacent=False):
        raise SelfIntersectingWalls("left and right walls cross")
    left.setflags(write=False)
    right.setflags(write=False)
    return left, right


def wall_segments(*walls: np.ndarray) -> np.ndarray:
    """Stack closed wall polylines into an ``(M, 4)`` array of segments."""
    segs = [np.hstack((w, np.roll(w, -1, axis=0))) for w in walls]
    return np.ascontiguousarray(np.vstack(segs))


# ---------------------------------------------------------------------------
# Vehicle


def _derivative(xs, delta_target, v_target, p: VehicleParams):
    x, y, psi, v, delta = xs
    d_delta = (delta_target - delta) / p.tau_delta
    dv = min(max((v_target - v) / p.tau_v, -p.a_cmd_max), p.a_cmd_max)
    return (v * math.cos(psi), v * math.sin(psi), v * math.tan(delta) / p.wheelbase, dv, d_delta)


def step_vehicle(state: VehicleState, cmd: ControlCommand, params: VehicleParams, dt: float) -> VehicleState:
    """Advance the vehicle by one physics substep with RK4."""
    if not (0.0 < dt <= MAX_SUBSTEP + 1e-12):
        raise InvalidDt(f"dt must be in (0, {MAX_SUBSTEP}], got {dt}")
    dmax = params.delta_max
    delta_target = min(max(cmd.delta_target, -dmax), dmax)
    v_target = max(cmd.v_target, 0.0)
    s0 = (state.pose.x, state.pose.y, state.pose.psi, state.v, state.delta_measured)

    def shifted(base, k, h):
        return tuple(b + h * d for b, d in zip(base, k))

    k1 = _derivative(s0, delta_target, v_target, params)
    k2 = _derivative(shifted(s0, k1, dt / 2), delta_target, v_target, params)
    k3 = _derivative(shifted(s0, k2, dt / 2), delta_target, v_target, params)
    k4 = _derivative(shifted(s0, k3, dt), delta_target, v_target, params)
    x, y, psi, v, delta = (
        b + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4) for b, a1, a2, a3, a4 in zip(s0, k1, k2, k3, k4)
    )
    v = max(v, 0.0)
    delta = min(max(delta, -dmax), dmax)
    return VehicleState(
        pose=Pose2(x, y, float(normalize_angle(psi))),
        v=v,
        yaw_rate=v * math.tan(delta) / params.wheelbase,
        delta_measured=delta,
        t=state.t + dt,
    )


# ---------------------------------------------------------------------------
# LiDAR


@numba.njit(cache=True)
def _raycast(segs, ox, oy, angles, max_range, no_return):
    n = angles.shape[0]
    out = np.empty(n)
    for k in range(n):
        dx = math.cos(angles[k])
        dy = math.sin(angles[k])
        best = np.inf
        for j in range(segs.shape[0]):
            ax = segs[j, 0]
            ay = segs[j, 1]
            ex = segs[j, 2] - ax
            ey = segs[j, 3] - ay
            denom = dx * ey - dy * ex
            if abs(denom) < 1e-15:
                continue
            wx = ax - ox
            wy = ay - oy
            t = (wx * ey - wy * ex) / denom
            if t < 0.0 or t >= best:
                continue
            u = (wx * dy - wy * dx) / denom
            if u < 0.0 or u > 1.0:
                continue
            best = t
        out[k] = best if best <= max_range else no_return
    return out


def cast_lidar(
    left: np.ndarray,
    right: np.ndarray,
    sensor_pose: Pose2,
    cfg: SensorConfig,
    rng_seed: int,
    t: float = 0.0,
    segments: np.ndarray | None = None,
) -> LidarScan:
    """Simulated scan; ``segments`` may carry a precomputed :func:`wall_segments`."""
    segs = wall_segments(left, right) if segments is None else segments
    rel = cfg.angle_min + cfg.angular_increment * np.arange(cfg.n_beams)
    ranges = _raycast(segs, float(sensor_pose.x), float(sensor_pose.y), rel + sensor_pose.psi, cfg.max_range, cfg.no_return)
    if cfg.noise_sigma > 0:
        noise = np.random.default_rng(rng_seed).standard_normal(cfg.n_beams)
        # clipped at 3 sigma so every return stays within 3 sigma of the truth
        noise = np.clip(noise, -3.0, 3.0) * cfg.noise_sigma
        hit = ranges <= cfg.max_range
        noisy = np.clip(ranges + noise, 1e-3, cfg.max_range)
        ranges = np.where(hit, noisy, ranges)
    return LidarScan(cfg.angle_min, cfg.angular_increment, ranges, cfg.max_range, t)


def sensor_pose(state: VehicleState, cfg: SensorConfig) -> Pose2:
    return compose(state.pose, cfg.mount_offset)


# ---------------------------------------------------------------------------
# Collision and laps


def footprint(state: VehicleState, params: VehicleParams) -> np.ndarray:
    """Corners of the body rectangle, centered midway between the axles."""
    psi = state.pose.psi
    c, s = math.cos(psi), math.sin(psi)
    cx = state.pose.x + 0.5 * params.wheelbase * c
    cy = state.pose.y + 0.5 * params.wheelbase * s
    hl, hw = params.length_footprint / 2.0, params.track_halfwidth_footprint
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    return np.column_stack((cx + local[:, 0] * c - local[:, 1] * s, cy + local[:, 0] * s + local[:, 1] * c))


def check_collision(
    left: np.ndarray,
    right: np.ndarray,
    state: VehicleState,
    params: VehicleParams,
    segments: np.ndarray | None = None,
) -> bool:
    segs = wall_segments(left, right) if segments is None else segments
    corners = footprint(state, params)
    center = corners.mean(axis=0)
    reach = 0.5 * math.hypot(params.length_footprint, params.width) + 1e-6
    a, b = segs[:, :2], segs[:, 2:]
    # cheap rejection: segments whose bounding box is far from the body
    near = (
        (np.minimum(a[:, 0], b[:, 0]) <= center[0] + reach)
        & (np.maximum(a[:, 0], b[:, 0]) >= center[0] - reach)
        & (np.minimum(a[:, 1], b[:, 1]) <= center[1] + reach)
        & (np.maximum(a[:, 1], b[:, 1]) >= center[1] - reach)
    )
    if not np.any(near):
        return False
    a, b = a[near], b[near]
    edges0 = corners
    edges1 = np.roll(corners, -1, axis=0)
    if np.any(segments_intersect(edges0[:, None, :], edges1[:, None, :], a[None], b[None])):
        return True
    # wall segment lying completely inside the body
    psi = state.pose.psi
    c, s = math.cos(psi), math.sin(psi)
    rel = a - center
    lx = rel[:, 0] * c + rel[:, 1] * s
    ly = -rel[:, 0] * s + rel[:, 1] * c
    inside = (np.abs(lx) <= params.length_footprint / 2.0) & (np.abs(ly) <= params.track_halfwidth_footprint)
    return bool(np.any(inside))


def start_line(track: Track) -> tuple[np.ndarray, np.ndarray, float]:
    """Center, unit tangent and half width of the start/finish cross-section."""
    tangent = vertex_tangents(track.centerline, closed=True)[track.start_index]
    return track.centerline[track.start_index], tangent, float(track.width[track.start_index]) / 2.0


def detect_lap(track: Track, prev: Pose2, curr: Pose2, t_prev: float = 0.0, t_curr: float = 1.0) -> LapEvent | None:
    """Forward crossing of the start line between two consecutive poses."""
    center, tangent, half = start_line(track)
    side_prev = (prev.x - center[0]) * tangent[0] + (prev.y - center[1]) * tangent[1]
    side_curr = (curr.x - center[0]) * tangent[0] + (curr.y - center[1]) * tangent[1]
    if not (side_prev < 0.0 <= side_curr):
        return None
    frac = -side_prev / (side_curr - side_prev)
    px = prev.x + frac * (curr.x - prev.x)
    py = prev.y + frac * (curr.y - prev.y)
    lateral = -(px - center[0]) * tangent[1] + (py - center[1]) * tangent[0]
    if abs(lateral) > half:
        return None
    return LapEvent(fraction=frac, time=t_prev + frac * (t_curr - t_prev))


@dataclass
class World:
    """Track with its cached walls and segment array."""

    track: Track
    left: np.ndarray = field(init=False)
    right: np.ndarray = field(init=False)
    segments: np.ndarray = field(init=False)

    def __post_init__(self):
        self.left, self.right = build_walls(self.track)
        self.segments = wall_segments(self.left, self.right)

    def scan(self, state: VehicleState, cfg: SensorConfig, rng_seed: int) -> LidarScan:
        return cast_lidar(self.left, self.right, sensor_pose(state, cfg), cfg, rng_seed, t=state.t, segments=self.segments)

    def collides(self, state: VehicleState, params: VehicleParams) -> bool:
        return check_collision(self.left, self.right, state, params, segments=self.segments)
