import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localrace.errors import EmptyScan, InvalidParams, InvalidWidth, NoWalls, TooFewPoints
from localrace.geometry import Pose2, point_segment_distance
from localrace.perception import WallPair, WallSegment, detect_walls
from localrace.planning import (
    WIDTH_BAND,
    PlannerParams,
    SmoothingParams,
    WidthProfile,
    estimate_track_width,
    generate_centerline,
    laplacian_smooth,
    opheim_simplify,
    plan_pipeline,
    plan_stages,
)
from localrace.simulator import SensorConfig, build_walls, cast_lidar
from localrace.tracks import generate_track
from fixtures import corridor, line, scan_of, to_world

PLANNER = PlannerParams()
SMOOTH = PLANNER.smoothing


def walls_of(scan, params=PLANNER):
    return detect_walls(scan, params.segmentation)[2]


def polyline_distance(p, poly):
    return float(np.min(point_segment_distance(np.asarray(p, float)[None, :], poly[:-1], poly[1:])))


def test_smoothing_params_validation():
    with pytest.raises(InvalidParams):
        SmoothingParams(width_window=4)
    with pytest.raises(InvalidParams):
        SmoothingParams(opheim_min_tol=1.0, opheim_max_tol=0.5)
    with pytest.raises(InvalidParams):
        SmoothingParams(laplacian_lambda=1.0)


# --- width ------------------------------------------------------------------


def test_width_straight_corridor():
    walls = walls_of(scan_of(corridor(2.0), noise=0.01, seed=1))
    prof = estimate_track_width(walls, WidthProfile.empty(), SMOOTH)
    assert prof.n_valid > 10
    assert np.all(np.abs(prof.smoothed - 2.0) <= 0.02)
    assert prof.last_valid == pytest.approx(2.0, abs=0.02)
    assert len(prof.smoothed) == len(prof.width)


def test_width_one_side_keeps_memory():
    left = WallSegment.from_points(line((0.5, 1.0), (6.0, 1.0), 50))
    prof = estimate_track_width(WallPair(left, None), WidthProfile.empty(1.7), SMOOTH)
    assert prof.last_valid == 1.7
    assert prof.n_valid == 0


@given(st.floats(0.8, 3.5), st.floats(-0.3, 0.3), st.floats(-0.2, 0.2), st.integers(0, 1000))
def test_width_positive_and_banded(width, y_frac, psi, seed):
    scan = scan_of(corridor(width), Pose2(0.0, y_frac * width, psi), noise=0.01, seed=seed)
    prof = estimate_track_width(walls_of(scan), WidthProfile.empty(), SMOOTH)
    if prof.n_valid:
        assert np.all(prof.smoothed > 0)
        assert WIDTH_BAND[0] <= prof.last_valid <= WIDTH_BAND[1]


# --- centerline -------------------------------------------------------------


def test_centerline_between_walls():
    scan = scan_of(corridor(2.0))
    walls = walls_of(scan)
    prof = estimate_track_width(walls, WidthProfile.empty(), SMOOTH)
    center = generate_centerline(walls, prof, SMOOTH)
    assert np.all(np.abs(center.points[:, 1]) <= 0.02)
    assert center.source_side == "both"
    assert len(center.points) <= SMOOTH.max_centerline_points + 1


def test_centerline_one_wall_uses_memory():
    left, _ = corridor(2.0)
    walls = walls_of(scan_of([left]))
    assert walls.right is None
    prof = estimate_track_width(walls, WidthProfile.empty(2.0), SMOOTH)
    center = generate_centerline(walls, prof, SMOOTH)
    assert np.all(np.abs(center.points[:, 1]) <= 0.02)
    assert center.source_side == "left"


def test_centerline_needs_width():
    left, _ = corridor(2.0)
    walls = walls_of(scan_of([left]))
    with pytest.raises(InvalidWidth):
        generate_centerline(walls, WidthProfile.empty(), SMOOTH)


def bend_walls(width=2.0, radius=2.0):
    """Straight along +x, then a 90 degree left bend, then straight along +y."""
    th = np.linspace(-math.pi / 2, 0.0, 40)

    def side(offset):
        r = radius - offset
        arc = np.column_stack((4.0 + r * np.cos(th), radius + r * np.sin(th)))
        return np.vstack(([-3.0, radius - r], arc, [4.0 + r, 14.0]))

    return side(width / 2), side(-width / 2)


def test_bend_follows_outer_wall():
    left, right = bend_walls()
    scan = scan_of([left, right], Pose2(2.5, 0.0, 0.0))
    walls = walls_of(scan)
    prof = estimate_track_width(walls, WidthProfile.empty(2.0), SMOOTH)
    center = generate_centerline(walls, prof, SMOOTH)
    assert center.source_side == "both"
    outer = to_world(walls.right.points, Pose2(0, 0, 0))
    d = [polyline_distance(p, outer) for p in center.points]
    assert np.max(np.abs(np.array(d) - prof.last_valid / 2)) < 0.1
    # the mean of the visible wall portions does not coincide with it
    inner = walls.left.points
    naive = 0.5 * (inner.mean(axis=0) + outer.mean(axis=0))
    assert polyline_distance(naive, center.points) > 0.2


# --- smoothing and simplification -------------------------------------------


def test_laplacian_example():
    out = laplacian_smooth(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]), replace(SMOOTH, laplacian_iterations=1))
    assert out.tolist() == [[0.0, 0.0], [1.0, 0.5], [2.0, 0.0]]


def test_laplacian_identity_cases():
    pts = np.column_stack((np.linspace(0, 5, 11), 0.5 * np.linspace(0, 5, 11)))
    assert np.allclose(laplacian_smooth(pts, replace(SMOOTH, laplacian_iterations=7)), pts, atol=1e-12)
    wiggle = np.random.default_rng(0).normal(size=(10, 2))
    assert np.array_equal(laplacian_smooth(wiggle, replace(SMOOTH, laplacian_lambda=0.0)), wiggle)


@given(st.integers(0, 10_000), st.floats(0.0, 0.99), st.integers(3, 40))
def test_laplacian_contractive(seed, lam, n):
    pts = np.random.default_rng(seed).normal(size=(n, 2))
    params = replace(SMOOTH, laplacian_lambda=lam, laplacian_iterations=1)
    out = laplacian_smooth(pts, params)
    assert np.array_equal(out[[0, -1]], pts[[0, -1]])
    dev = np.hypot(*(0.5 * (pts[:-2] + pts[2:]) - pts[1:-1]).T)
    moved = np.hypot(*(out - pts).T)
    assert moved.max() <= lam * dev.max() + 1e-12


def test_opheim_collinear():
    pts = np.column_stack((np.linspace(0.0, 0.9, 100), np.zeros(100)))
    assert np.array_equal(opheim_simplify(pts, replace(SMOOTH, opheim_min_tol=0.01)), pts[[0, -1]])
    long = np.column_stack((np.linspace(0.0, 3.0, 100), np.zeros(100)))
    out = opheim_simplify(long, replace(SMOOTH, opheim_min_tol=0.01))
    assert np.array_equal(out[[0, -1]], long[[0, -1]])
    assert np.all(np.diff(out[:, 0]) <= SMOOTH.opheim_max_tol + 1e-12)
    assert len(out) == 4


def test_opheim_square_wave_keeps_corners():
    corners = []
    for k in range(6):
        corners += [(0.5 * k, 0.5 * (k % 2)), (0.5 * k + 0.5, 0.5 * (k % 2))]
    corners = np.array(corners)
    dense = np.vstack([np.linspace(a, b, 6, endpoint=False) for a, b in zip(corners[:-1], corners[1:])] + [corners[-1:]])
    out = opheim_simplify(dense, replace(SMOOTH, opheim_min_tol=0.01))
    for c in corners:
        assert np.any(np.all(np.isclose(out, c), axis=1))


def test_opheim_two_points():
    pts = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert np.array_equal(opheim_simplify(pts, SMOOTH), pts)


@given(st.integers(0, 10_000), st.integers(2, 60), st.floats(0.005, 0.2))
def test_opheim_subsequence(seed, n, tol):
    pts = np.cumsum(np.random.default_rng(seed).normal(0, 0.1, (n, 2)), axis=0)
    out = opheim_simplify(pts, replace(SMOOTH, opheim_min_tol=tol))
    idx = [int(np.flatnonzero(np.all(pts == p, axis=1))[0]) for p in out]
    assert idx == sorted(set(idx)) and idx[0] == 0 and idx[-1] == n - 1
    assert len(out) <= n


# --- full pipeline ----------------------------------------------------------


def test_pipeline_straight_corridor():
    spline, _ = plan_pipeline(scan_of(corridor(2.0), noise=0.01, seed=3), WidthProfile.empty(), PLANNER)
    s = np.linspace(0.0, spline.total_length, 200)
    assert np.max(np.abs(spline.curvature(s))) < 0.05


def test_pipeline_empty_scan():
    scan = scan_of([line((-5.0, 100.0), (-4.0, 100.0))])
    with pytest.raises(EmptyScan):
        plan_pipeline(scan, WidthProfile.empty(), PLANNER)


def barrier_slalom(width=2.0, panel=10.0, stagger=2.0, n=4):
    """Barriers alternating between the two sides, each ``panel`` long."""
    walls = []
    for k in range(n):
        x0 = k * (panel + stagger)
        y = width / 2 if k % 2 == 0 else -width / 2
        walls.append(line((x0 - (3.0 if k == 0 else 0.0), y), (x0 + panel, y), 2))
    return walls


def test_pipeline_slalom_has_one_sided_frames():
    walls = barrier_slalom()
    width = WidthProfile.empty(2.0)
    one_sided = 0
    for k, x in enumerate(np.arange(0.0, 30.0, 0.5)):
        try:
            stages = plan_stages(scan_of(walls, Pose2(x, 0.0, 0.0), noise=0.01, seed=k), width, PLANNER)
        except (NoWalls, TooFewPoints):
            continue
        width = stages.width
        assert stages.spline.total_length > 0.5
        assert np.all(np.isfinite(stages.spline.curvature(np.linspace(0, stages.spline.total_length, 50))))
        one_sided += not stages.walls.both
    assert one_sided >= 1


def test_frame_stability():
    scene = corridor(1.6, heading=0.3)
    pose = Pose2(0.0, 0.1, 0.25)
    a = plan_stages(scan_of(scene, pose), WidthProfile.empty(), PLANNER)
    b = plan_stages(scan_of(scene, pose), a.width, PLANNER)
    assert a.centerline.points.shape == b.centerline.points.shape
    assert np.max(np.hypot(*(a.centerline.points - b.centerline.points).T)) < 1e-6
