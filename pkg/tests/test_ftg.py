import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localrace.errors import InvalidParams, NoGap
from localrace.ftg import FtgParams, find_gap, follow_the_gap
from localrace.geometry import Pose2
from localrace.simulator import LidarScan
from fixtures import corridor, line, scan_of

PARAMS = FtgParams()


def mirrored(scan: LidarScan) -> LidarScan:
    return LidarScan(scan.angle_min, scan.angular_increment, scan.ranges[::-1].copy(), scan.max_range)


def test_params_validation():
    with pytest.raises(InvalidParams):
        FtgParams(bubble_radius=0.0)


def test_symmetric_corridor_goes_straight():
    cmd = follow_the_gap(scan_of(corridor(2.0)), PARAMS)
    assert cmd.delta_target == 0.0
    assert cmd.v_target == pytest.approx(PARAMS.speed_straight)


def test_obstacle_on_left_steers_right():
    walls = corridor(3.0) + (line((1.0, 0.1), (1.0, 1.5)),)
    gap = find_gap(scan_of(walls), PARAMS)
    assert gap.target_angle < 0
    assert follow_the_gap(scan_of(walls), PARAMS).delta_target < 0


def test_wall_dead_ahead_stops():
    th = np.linspace(-2.0, 2.0, 200)
    scan = scan_of([0.3 * np.column_stack((np.cos(th), np.sin(th)))])
    with pytest.raises(NoGap):
        find_gap(scan, PARAMS)
    cmd = follow_the_gap(scan, PARAMS)
    assert (cmd.delta_target, cmd.v_target) == (0.0, 0.0)


def test_speed_drops_in_turns():
    walls = corridor(3.0) + (line((1.0, 0.1), (1.0, 1.5)),)
    cmd = follow_the_gap(scan_of(walls), PARAMS)
    assert PARAMS.speed_turn <= cmd.v_target < PARAMS.speed_straight


scenes = st.tuples(
    st.floats(1.0, 3.0),
    st.floats(-0.3, 0.3),
    st.floats(-0.5, 0.5),
    st.floats(0.8, 4.0),
    st.floats(-1.0, 1.0),
    st.integers(0, 1000),
)


def scene_scan(width, y_frac, psi, ox, oy, seed):
    walls = corridor(width) + (line((ox, oy * width / 2 - 0.2), (ox, oy * width / 2 + 0.2)),)
    return scan_of(walls, Pose2(0.0, y_frac * width, psi), noise=0.01, seed=seed)


@given(scenes)
def test_mirror_symmetry(scene):
    scan = scene_scan(*scene)
    a = follow_the_gap(scan, PARAMS)
    b = follow_the_gap(mirrored(scan), PARAMS)
    assert b.delta_target == -a.delta_target
    assert b.v_target == a.v_target


@given(scenes)
def test_heading_points_into_gap(scene):
    try:
        gap = find_gap(scene_scan(*scene), PARAMS)
    except NoGap:
        return
    assert gap.start_angle <= gap.target_angle <= gap.end_angle
    cmd = follow_the_gap(scene_scan(*scene), PARAMS)
    assert math.copysign(1.0, cmd.delta_target) == math.copysign(1.0, gap.target_angle) or cmd.delta_target == 0.0
