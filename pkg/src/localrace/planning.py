"""Track width estimation, centerline reconstruction and path post-processing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, InvalidWidth, NoWalls, TooFewPoints
from .geometry import (
    PathSpline,
    drop_duplicates,
    fit_spline,
    resample_polyline,
    vertex_tangents,
)
from .perception import SegmentationParams, WallPair, WallSegment, detect_walls
from .simulator import LidarScan

WIDTH_BAND = (0.3, 5.0)
# wall normals are taken across this much wall on either side, so range noise
# on closely spaced samples does not tilt them
NORMAL_SPAN = 0.3
MEDIAN_DEVIATION = 0.5


@dataclass(frozen=True)
class SmoothingParams:
    laplacian_iterations: int = 3
    laplacian_lambda: float = 0.5
    opheim_min_tol: float = 0.03
    opheim_max_tol: float = 1.0
    width_window: int = 9
    pair_angle_range: float = math.radians(15.0)
    resolution: float = 0.10
    max_centerline_points: int = 50

    def __post_init__(self):
        if not 0.0 <= self.laplacian_lambda < 1.0:
            raise InvalidParams("laplacian_lambda must lie in [0, 1)")
        if not 0.0 < self.opheim_min_tol < self.opheim_max_tol:
            raise InvalidParams("need 0 < opheim_min_tol < opheim_max_tol")
        if self.width_window < 1 or self.width_window % 2 != 1:
            raise InvalidParams("width_window must be a positive odd integer")
        if self.laplacian_iterations < 0 or self.resolution <= 0 or self.pair_angle_range <= 0:
            raise InvalidParams("invalid smoothing parameters")


@dataclass(frozen=True)
class PlannerParams:
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)


@dataclass(frozen=True, eq=False)
class WidthProfile:
    """Point-by-point width along the representative wall plus the cross-frame memory."""

    s_along: np.ndarray
    width: np.ndarray
    valid: np.ndarray
    smoothed: np.ndarray
    last_valid: float

    @classmethod
    def empty(cls, last_valid: float = 0.0) -> "WidthProfile":
        z = np.zeros(0)
        return cls(z, z, np.zeros(0, dtype=bool), z, float(last_valid))

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(self.valid))


@dataclass(frozen=True, eq=False)
class Centerline:
    points: np.ndarray
    source_side: str


# ---------------------------------------------------------------------------
# Wall helpers


def representative_side(walls: WallPair) -> str:
    """Side with greater arc length; ties go to more points, then left."""
    if walls.left is None and walls.right is None:
        raise NoWalls("no walls to choose from")
    if walls.right is None:
        return "left"
    if walls.left is None:
        return "right"
    left, right = walls.left, walls.right
    if (right.arc_length, len(right)) > (left.arc_length, len(left)):
        return "right"
    return "left"


def oriented(points: np.ndarray) -> np.ndarray:
    """Order wall points away from the vehicle (nearest end first)."""
    if np.hypot(*points[-1]) < np.hypot(*points[0]):
        return points[::-1]
    return points


def inward_normals(points: np.ndarray, side: str, spacing: float | None = None) -> np.ndarray:
    """Unit normals pointing from a forward-ordered wall towards the track.

    With ``spacing`` (the sample spacing) the tangent spans ``NORMAL_SPAN``
    metres either side instead of the adjacent samples.
    """
    span = 1 if spacing is None else max(1, int(round(NORMAL_SPAN / spacing)))
    t = vertex_tangents(points, span=span)
    if side == "left":
        return np.column_stack((t[:, 1], -t[:, 0]))
    return np.column_stack((-t[:, 1], t[:, 0]))


def wall_samples(seg: WallSegment, resolution: float) -> np.ndarray:
    """Forward-ordered wall resampled at ``resolution``.

    Dense near-range returns are thinned to ``resolution`` first so that range
    noise does not inflate the arc length.
    """
    pts = drop_duplicates(oriented(seg.points), resolution)
    if len(pts) < 2:
        return pts
    return resample_polyline(pts, resolution)


# ---------------------------------------------------------------------------
# Width


def _centered_median(values: np.ndarray, mask: np.ndarray, window: int) -> np.ndarray:
    idx = np.nonzero(mask)[0]
    med = np.full(len(values), np.nan)
    half = window // 2
    for k, i in enumerate(idx):
        lo, hi = max(0, k - half), min(len(idx), k + half + 1)
        med[i] = np.median(values[idx[lo:hi]])
    return med


def _valid_window_average(values: np.ndarray, valid: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average over ``window`` valid samples, mapped to every index."""
    idx = np.nonzero(valid)[0]
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(values[idx])))
    # nearest valid sample for every index (ties to the earlier one)
    pos = np.searchsorted(idx, np.arange(len(values)))
    pos = np.clip(pos, 0, len(idx) - 1)
    prev = np.clip(pos - 1, 0, len(idx) - 1)
    closer_prev = np.abs(idx[prev] - np.arange(len(values))) <= np.abs(idx[pos] - np.arange(len(values)))
    k = np.where(closer_prev, prev, pos)
    lo = np.maximum(0, k - half)
    hi = np.minimum(len(idx), k + half + 1)
    return (csum[hi] - csum[lo]) / (hi - lo)


def estimate_track_width(walls: WallPair, prev: WidthProfile, params: SmoothingParams) -> WidthProfile:
    if not walls.both:
        return WidthProfile.empty(prev.last_valid)
    side = representative_side(walls)
    main = walls.left if side == "left" else walls.right
    other = walls.right if side == "left" else walls.left
    a = wall_samples(main, params.resolution)
    b = wall_samples(other, params.resolution)
    if len(a) < 2 or len(b) < 2:
        return WidthProfile.empty(prev.last_valid)
    normals = inward_normals(a, side, params.resolution)
    other_normals = inward_normals(b, "right" if side == "left" else "left", params.resolution)

    rel = b[None, :, :] - a[:, None, :]
    dist = np.hypot(rel[..., 0], rel[..., 1])
    cos_dev = np.einsum("ijk,ik->ij", rel, normals) / np.maximum(dist, 1e-12)
    # the pair must also lie along the other wall's normal: rejects pairing a
    # far wall with the cut-off end of an occluded one in bends
    cos_back = -np.einsum("ijk,jk->ij", rel, other_normals) / np.maximum(dist, 1e-12)
    cos_min = math.cos(params.pair_angle_range)
    cos_dev = np.where((cos_dev >= cos_min) & (cos_back >= cos_min), cos_dev, -np.inf)
    best = np.argmax(cos_dev, axis=1)
    rows = np.arange(len(a))
    found = np.isfinite(cos_dev[rows, best])
    width = np.where(found, dist[rows, best] * np.where(found, cos_dev[rows, best], 0.0), 0.0)

    in_band = found & (width >= WIDTH_BAND[0]) & (width <= WIDTH_BAND[1])
    med = _centered_median(width, in_band, params.width_window)
    valid = in_band & (np.abs(width - med) <= MEDIAN_DEVIATION * med)

    s_along = np.concatenate(([0.0], np.cumsum(np.hypot(*np.diff(a, axis=0).T))))
    if not np.any(valid):
        return WidthProfile(s_along, width, valid, np.full(len(a), prev.last_valid), prev.last_valid)
    smoothed = _valid_window_average(width, valid, params.width_window)
    return WidthProfile(s_along, width, valid, smoothed, float(smoothed[-1]))


# ---------------------------------------------------------------------------
# Centerline


def generate_centerline(walls: WallPair, width: WidthProfile, params: SmoothingParams) -> Centerline:
    if walls.left is None and walls.right is None:
        raise NoWalls("no walls to follow")
    if not width.last_valid > 0:
        raise InvalidWidth(f"no usable track width (last_valid={width.last_valid})")
    side = representative_side(walls)
    seg = walls.left if side == "left" else walls.right
    wall = wall_samples(seg, params.resolution)
    if len(wall) < 2:
        raise TooFewPoints("representative wall too short")
    if walls.both and width.n_valid > 0 and len(width.smoothed) == len(wall):
        half = width.smoothed / 2.0
    else:
        half = np.full(len(wall), width.last_valid / 2.0)
    center = wall + half[:, None] * inward_normals(wall, side, params.resolution)

    # drop samples folded back by offsetting inside a tight bend
    keep = [0]
    for i in range(1, len(center)):
        step = center[i] - center[keep[-1]]
        wall_dir = wall[i] - wall[keep[-1]]
        if step @ wall_dir > 0.0:
            keep.append(i)
    center = center[keep]

    stride = max(1, math.ceil(len(center) / params.max_centerline_points))
    if stride > 1:
        center = np.vstack((center[::stride], center[-1:])) if (len(center) - 1) % stride else center[::stride]
    center = drop_duplicates(center, 1e-6)
    if len(center) < 3:
        raise TooFewPoints(f"centerline has only {len(center)} points")
    return Centerline(center, "both" if walls.both else side)


# ---------------------------------------------------------------------------
# Post-processing


def laplacian_smooth(path: np.ndarray, params: SmoothingParams) -> np.ndarray:
    pts = np.array(path, dtype=float)
    if len(pts) < 3:
        raise TooFewPoints("laplacian smoothing needs at least 3 points")
    lam = params.laplacian_lambda
    for _ in range(params.laplacian_iterations):
        mid = 0.5 * (pts[:-2] + pts[2:])
        pts[1:-1] += lam * (mid - pts[1:-1])
    return pts


def _ray_distance2(p: np.ndarray, origin: np.ndarray, through: np.ndarray) -> float:
    d = through - origin
    w = p - origin
    t = max(0.0, float(w @ d) / float(d @ d))
    e = w - t * d
    return float(e @ e)


def opheim_simplify(path: np.ndarray, params: SmoothingParams) -> np.ndarray:
    """Opheim simplification (psimpl semantics).

    From the current key, the ray runs through the first vertex outside the
    minimum radial tolerance. Following vertices are absorbed while they stay
    within ``opheim_min_tol`` of that ray and within ``opheim_max_tol`` of the
    key; the last absorbed vertex becomes the next key.
    """
    pts = np.asarray(path, dtype=float)
    n = len(pts)
    if n < 2:
        raise TooFewPoints("simplification needs at least 2 points")
    min2 = params.opheim_min_tol**2
    max2 = params.opheim_max_tol**2
    keys = [0]
    key = 0
    while key < n - 1:
        r1 = key + 1
        while r1 < n - 1 and float(np.sum((pts[r1] - pts[key]) ** 2)) < min2:
            r1 += 1
        j = r1
        while j + 1 < n:
            nxt = pts[j + 1]
            if _ray_distance2(nxt, pts[key], pts[r1]) > min2 or float(np.sum((nxt - pts[key]) ** 2)) > max2:
                break
            j += 1
        key = j
        keys.append(key)
    return pts[keys]


@dataclass(frozen=True, eq=False)
class PlanStages:
    """Every intermediate product of one planning pass."""

    points: np.ndarray
    segments: list
    walls: WallPair
    width: WidthProfile
    centerline: Centerline
    smoothed: np.ndarray
    simplified: np.ndarray
    spline: PathSpline


def trim_to_nearest(points: np.ndarray, origin=(0.0, 0.0)) -> np.ndarray:
    d = np.hypot(points[:, 0] - origin[0], points[:, 1] - origin[1])
    return points[int(np.argmin(d)):]


def plan_stages(scan: LidarScan, prev: WidthProfile, params: PlannerParams) -> PlanStages:
    points, kept, walls = detect_walls(scan, params.segmentation)
    width = estimate_track_width(walls, prev, params.smoothing)
    center = generate_centerline(walls, width, params.smoothing)
    path = trim_to_nearest(center.points)
    if len(path) < 3:
        raise TooFewPoints("centerline ahead of the vehicle is too short")
    smoothed = laplacian_smooth(path, params.smoothing)
    simplified = opheim_simplify(smoothed, params.smoothing)
    if len(simplified) < 3:
        # keep a mid-point so short straight horizons still yield a spline
        simplified = smoothed[[0, len(smoothed) // 2, len(smoothed) - 1]]
    spline = fit_spline(simplified)
    return PlanStages(points, kept, walls, width, center, smoothed, simplified, spline)


def plan_pipeline(scan: LidarScan, prev: WidthProfile, params: PlannerParams) -> tuple[PathSpline, WidthProfile]:
    stages = plan_stages(scan, prev, params)
    return stages.spline, stages.width

