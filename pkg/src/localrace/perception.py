"""LiDAR scan segmentation into left/right wall candidates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyScan, InvalidParams, NoWalls
from .geometry import segment_lengths
from .simulator import LidarScan


@dataclass(frozen=True)
class SegmentationParams:
    base_break_threshold: float = 0.10
    adaptive_gain: float = 2.0
    weight_window: int = 7
    min_segment_points: int = 5
    min_segment_length: float = 0.30
    max_segment_distance: float = 10.0
    max_segment_angle: float = math.radians(80.0)

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise InvalidParams(f"{name} must be positive")
        if self.weight_window % 2 != 1:
            raise InvalidParams("weight_window must be odd")


@dataclass(frozen=True, eq=False)
class WallSegment:
    """Run of scan points in the vehicle frame (x forward, y left), in scan order."""

    points: np.ndarray
    chord_angle: float
    mean_distance: float
    arc_length: float

    @classmethod
    def from_points(cls, points: np.ndarray) -> "WallSegment":
        points = np.asarray(points, dtype=float)
        if len(points) > 1:
            dx, dy = points[-1] - points[0]
            angle = math.atan2(dy, dx)
            # a chord is a line, not a direction: fold into (-pi/2, pi/2]
            if angle > math.pi / 2:
                angle -= math.pi
            elif angle <= -math.pi / 2:
                angle += math.pi
            arc = float(segment_lengths(points).sum())
        else:
            angle, arc = 0.0, 0.0
        return cls(points, angle, float(np.hypot(points[:, 0], points[:, 1]).mean()), arc)

    def __len__(self) -> int:
        return len(self.points)

    def nearest_point(self) -> np.ndarray:
        return self.points[int(np.argmin(np.hypot(self.points[:, 0], self.points[:, 1])))]


@dataclass(frozen=True)
class WallPair:
    left: WallSegment | None
    right: WallSegment | None

    def __post_init__(self):
        if self.left is None and self.right is None:
            raise NoWalls("a wall pair needs at least one side")

    @property
    def both(self) -> bool:
        return self.left is not None and self.right is not None


def scan_to_points(scan: LidarScan) -> np.ndarray:
    """Returns in the vehicle frame, dropping no-returns and points behind."""
    return np.vstack(scan_point_runs(scan))


def scan_point_runs(scan: LidarScan) -> list[np.ndarray]:
    """Points ahead split into runs of consecutive beams that all returned.

    A beam without a return always separates walls, even where the adaptive
    threshold (which grows with the sparse far-range spacing) would bridge it.
    """
    ranges = np.asarray(scan.ranges, dtype=float)
    angles = scan.angles
    ok = (ranges > 0) & (ranges <= scan.max_range)
    ahead = np.cos(angles) >= 0.0
    use = ahead & ok
    if not np.any(use):
        raise EmptyScan("no valid returns ahead of the vehicle")
    idx = np.flatnonzero(use)
    cuts = np.flatnonzero(np.diff(idx) > 1) + 1
    pts = np.column_stack((ranges[idx] * np.cos(angles[idx]), ranges[idx] * np.sin(angles[idx])))
    return np.split(pts, cuts)


def _triangular_weights(window: int) -> np.ndarray:
    half = window // 2
    return (half + 1 - np.abs(np.arange(-half, half + 1))).astype(float)


def break_thresholds(gaps: np.ndarray, params: SegmentationParams) -> np.ndarray:
    """Adaptive threshold per gap from the triangular-weighted local mean gap."""
    w = _triangular_weights(params.weight_window)
    half = params.weight_window // 2
    # full convolution sliced back, so runs shorter than the window keep their length
    num = np.convolve(gaps, w)[half : half + len(gaps)]
    den = np.convolve(np.ones_like(gaps), w)[half : half + len(gaps)]
    return params.base_break_threshold + params.adaptive_gain * num / den


def segment_scan(points: np.ndarray, params: SegmentationParams) -> list[WallSegment]:
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return []
    if len(points) == 1:
        return [WallSegment.from_points(points)]
    gaps = segment_lengths(points)
    cuts = np.nonzero(gaps > break_thresholds(gaps, params))[0] + 1
    return [WallSegment.from_points(chunk) for chunk in np.split(points, cuts)]


def filter_segments(segments: list[WallSegment], params: SegmentationParams) -> list[WallSegment]:
    return [
        seg
        for seg in segments
        if len(seg) >= params.min_segment_points
        and seg.arc_length >= params.min_segment_length
        and seg.mean_distance <= params.max_segment_distance
        and abs(seg.chord_angle) <= params.max_segment_angle
    ]


# segments whose nearest point lies within this bearing of the heading are
# "ahead" and get split where they cross the heading line
AHEAD_BEARING = math.pi / 4


def _split_at_heading_line(seg: WallSegment) -> list[WallSegment]:
    """Split a segment that straddles y = 0 ahead of the vehicle at its first crossing."""
    pts = seg.points
    y = pts[:, 1]
    near = seg.nearest_point()
    if abs(math.atan2(near[1], near[0])) >= AHEAD_BEARING:
        return [seg]
    for i in np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]:
        x_cross = pts[i, 0] + (pts[i + 1, 0] - pts[i, 0]) * y[i] / (y[i] - y[i + 1])
        if x_cross > 0:
            return [WallSegment.from_points(pts[: i + 1]), WallSegment.from_points(pts[i + 1 :])]
    return [seg]


def select_walls(segments: list[WallSegment]) -> WallPair:
    left_cands: list[WallSegment] = []
    right_cands: list[WallSegment] = []
    for seg in segments:
        for part in _split_at_heading_line(seg):
            lateral = part.nearest_point()[1]
            if lateral >= 0.0:
                left_cands.append(part)
            if lateral <= 0.0:
                right_cands.append(part)

    def best(cands):
        if not cands:
            return None
        return min(cands, key=lambda s: (-s.arc_length, s.mean_distance))

    left, right = best(left_cands), best(right_cands)
    if left is None and right is None:
        raise NoWalls("no wall candidates on either side")
    return WallPair(left=left, right=right)


def detect_walls(scan: LidarScan, params: SegmentationParams) -> tuple[np.ndarray, list[WallSegment], WallPair]:
    """Full perception chain; also returns intermediate stages for debugging."""
    runs = scan_point_runs(scan)
    points = np.vstack(runs)
    segments = [seg for run in runs for seg in segment_scan(run, params)]
    kept = filter_segments(segments, params)
    return points, kept, select_walls(kept)
