"""Follow-The-Gap reactive baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, NoGap
from .simulator import ControlCommand, LidarScan


@dataclass(frozen=True)
class FtgParams:
    bubble_radius: float = 0.35
    max_considered_range: float = 3.0
    min_gap_width: int = 10
    speed_straight: float = 3.5
    speed_turn: float = 1.5
    steer_gain: float = 0.8

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise InvalidParams(f"{name} must be positive")


@dataclass(frozen=True)
class GapChoice:
    start_angle: float
    end_angle: float
    target_angle: float


def _beam_angles(scan: LidarScan) -> np.ndarray:
    n = len(scan.ranges)
    offset = (np.arange(n) - (n - 1) / 2.0) * scan.angular_increment
    center = scan.angle_min + scan.angular_increment * (n - 1) / 2.0
    # exact mirror symmetry for scans centered on the heading
    if abs(center) < 1e-12:
        center = 0.0
    return center + offset


def find_gap(scan: LidarScan, params: FtgParams) -> GapChoice:
    angles = _beam_angles(scan)
    front = np.abs(angles) <= math.pi / 2 + 1e-12
    angles = angles[front]
    ranges = np.asarray(scan.ranges, dtype=float)[front]
    ranges = np.where(ranges > scan.max_range, params.max_considered_range, ranges)
    ranges = np.minimum(ranges, params.max_considered_range)

    free = ranges > params.bubble_radius
    r_min = float(ranges.min())
    half_window = math.atan2(params.bubble_radius, r_min)
    for a in angles[ranges <= r_min]:
        free &= np.abs(angles - a) > half_window

    # maximal runs of free beams
    padded = np.concatenate(([False], free, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, stops = edges[::2], edges[1::2]
    lengths = stops - starts
    ok = lengths >= params.min_gap_width
    if not np.any(ok):
        raise NoGap("no free gap wide enough")
    starts, stops, lengths = starts[ok], stops[ok], lengths[ok]
    centers = 0.5 * (angles[starts] + angles[stops - 1])
    order = np.lexsort((np.abs(centers), -lengths))
    g = order[0]
    lo, hi = starts[g], stops[g]

    seg_r = ranges[lo:hi]
    seg_a = angles[lo:hi]
    best = np.flatnonzero(seg_r == seg_r.max())
    dist = np.abs(seg_a[best] - centers[g])
    tied = best[dist == dist.min()]
    target = float(np.mean(seg_a[tied]))
    return GapChoice(float(seg_a[0]), float(seg_a[-1]), target)


def follow_the_gap(scan: LidarScan, params: FtgParams, delta_max: float = 0.40) -> ControlCommand:
    """Steer towards the deepest point of the widest free gap; stop if there is none."""
    try:
        gap = find_gap(scan, params)
    except NoGap:
        return ControlCommand(0.0, 0.0)
    delta = min(max(params.steer_gain * gap.target_angle, -delta_max), delta_max)
    v = params.speed_turn + (params.speed_straight - params.speed_turn) * math.cos(gap.target_angle)
    return ControlCommand(delta, max(v, 0.0))
