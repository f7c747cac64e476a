"""Synthetic scenes shared by the test modules."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from localrace.geometry import Pose2
from localrace.simulator import SensorConfig, cast_lidar


def open_segments(*walls) -> np.ndarray:
    """Segments of open polylines (no closing edge)."""
    segs = [np.hstack((np.asarray(w, float)[:-1], np.asarray(w, float)[1:])) for w in walls]
    return np.ascontiguousarray(np.vstack(segs))


def scan_of(walls, pose: Pose2 = Pose2(0.0, 0.0, 0.0), noise: float = 0.0, seed: int = 0, cfg: SensorConfig | None = None):
    """Scan seen by a sensor at ``pose`` among the given open wall polylines."""
    cfg = replace(cfg or SensorConfig(), noise_sigma=noise)
    segs = open_segments(*walls)
    dummy = np.zeros((2, 2))
    return cast_lidar(dummy, dummy, pose, cfg, seed, segments=segs)


def line(p0, p1, n: int = 2) -> np.ndarray:
    return np.linspace(np.asarray(p0, float), np.asarray(p1, float), n)


def corridor(width: float, heading: float = 0.0, back: float = 3.0, ahead: float = 30.0):
    """Straight walls at +/- width/2 about a centerline through the origin along ``heading``."""
    c, s = math.cos(heading), math.sin(heading)
    d = np.array([c, s])
    n = np.array([-s, c])
    left = line(-back * d + n * width / 2, ahead * d + n * width / 2)
    right = line(-back * d - n * width / 2, ahead * d - n * width / 2)
    return left, right


def width_step_walls(narrow: float = 1.0, wide: float = 2.0, x_step: float = 4.0, length: float = 14.0):
    """Right wall straight at -narrow/2; left wall jumps outward by wide - narrow at ``x_step``."""
    right = line((-2.0, -narrow / 2), (length, -narrow / 2))
    y_wide = wide - narrow / 2
    left = np.array([(-2.0, narrow / 2), (x_step, narrow / 2), (x_step, y_wide), (length, y_wide)])
    return left, right


def to_world(points: np.ndarray, pose: Pose2) -> np.ndarray:
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    return np.column_stack((pose.x + c * points[:, 0] - s * points[:, 1], pose.y + s * points[:, 0] + c * points[:, 1]))
