"""Extended Stanley lateral control and minimum-time longitudinal control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PLANNER_ERRORS, InvalidParams, NonpositiveDenominator, TooFewPoints
from .geometry import (
    ControlPoint,
    PathSpline,
    Pose2,
    compose,
    eval_spline,
    knot_control_points,
    normalize_angle,
    project_to_spline,
    relative,
)
from .planning import PlannerParams, WidthProfile, plan_pipeline
from .simulator import ControlCommand, LidarScan, SensorConfig, VehicleParams, VehicleState

LOOKAHEAD_STEP = 0.05
HOLD_BUDGET = 5


@dataclass(frozen=True)
class StanleyGains:
    k_ang: float = 0.6
    k_dist: float = 0.5
    k_soft: float = 5.0
    k_damp: float = 1.0
    k_rate: float = -0.013
    k_steer: float = 0.0
    L_max: float = 0.2
    kappa_norm: float = 1.0

    def __post_init__(self):
        if not (self.k_soft > 0 or self.k_damp > 0):
            raise InvalidParams("k_soft or k_damp must be positive")
        if self.k_soft < 0 or self.k_damp < 0:
            raise InvalidParams("k_soft and k_damp must be non-negative")
        if self.L_max < 0 or not self.kappa_norm > 0:
            raise InvalidParams("need L_max >= 0 and kappa_norm > 0")


@dataclass(frozen=True)
class VelocityLimits:
    v_min: float = 2.0
    v_max: float = 4.0
    a_x_max: float = 4.0
    a_x_min: float = 4.0
    a_y_max: float = 6.0
    da_min: float = -1.5
    da_max: float = 1.0

    def __post_init__(self):
        if not 0 < self.v_min <= self.v_max:
            raise InvalidParams("need 0 < v_min <= v_max")
        if not (self.a_x_max > 0 and self.a_x_min > 0 and self.a_y_max > 0):
            raise InvalidParams("acceleration magnitudes must be positive")
        if not self.da_min < 0 < self.da_max:
            raise InvalidParams("need da_min < 0 < da_max")


@dataclass(frozen=True)
class LateralErrors:
    delta_psi: float
    delta_d: float
    delta_r: float
    delta_delta: float

    def __neg__(self) -> "LateralErrors":
        return LateralErrors(-self.delta_psi, -self.delta_d, -self.delta_r, -self.delta_delta)


@dataclass(frozen=True, eq=False)
class VelocityProfile:
    v: np.ndarray
    forward: np.ndarray
    backward: np.ndarray


# ---------------------------------------------------------------------------
# Lateral


def compute_lookahead(spline: PathSpline, s_foot: float, gains: StanleyGains) -> ControlPoint:
    """Control point moved ahead of the foot point in proportion to the local curvature."""
    end = spline.total_length
    s_foot = min(max(s_foot, 0.0), end)
    w_end = min(s_foot + gains.L_max, end)
    if w_end - s_foot > 1e-12:
        n = int(math.ceil((w_end - s_foot) / LOOKAHEAD_STEP)) + 1
        samples = np.linspace(s_foot, w_end, n)
    else:
        samples = np.array([s_foot])
    kappa_mean = float(np.mean(np.abs(spline.curvature(samples))))
    lookahead = gains.L_max * min(1.0, kappa_mean / gains.kappa_norm)
    return eval_spline(spline, min(s_foot + lookahead, end))


def front_axle(pose: Pose2, wheelbase: float) -> tuple[float, float]:
    return pose.x + wheelbase * math.cos(pose.psi), pose.y + wheelbase * math.sin(pose.psi)


def lateral_errors(
    state: VehicleState,
    front_axle: tuple[float, float],
    cp: ControlPoint,
    prev_delta_measured: float,
    v: float,
) -> LateralErrors:
    """Heading, cross-track, yaw-rate and steering-rate errors at the control point.

    Heading error is path minus vehicle heading so that a positive heading gain
    turns the vehicle towards the path tangent (steering angle positive = left).
    """
    x_ego, y_ego = front_axle
    psi_cp = cp.psi_cp
    delta_psi = float(normalize_angle(psi_cp - state.pose.psi))
    delta_d = math.cos(psi_cp) * (cp.position.y - y_ego) - math.sin(psi_cp) * (cp.position.x - x_ego)
    delta_r = state.yaw_rate - v * cp.kappa
    delta_delta = state.delta_measured - prev_delta_measured
    return LateralErrors(delta_psi, delta_d, delta_r, delta_delta)


def stanley_steering(e: LateralErrors, v: float, gains: StanleyGains) -> float:
    denom = v * gains.k_damp + gains.k_soft
    if not denom > 0:
        raise NonpositiveDenominator(f"v*k_damp + k_soft = {denom}")
    return (
        gains.k_ang * e.delta_psi
        + math.atan(gains.k_dist * e.delta_d / denom)
        + gains.k_rate * e.delta_r
        + gains.k_steer * e.delta_delta
    )


# ---------------------------------------------------------------------------
# Longitudinal


def fit_velocity_profile(spline_points, v_seed: float, limits: VelocityLimits) -> VelocityProfile:
    """Forward/backward minimum-time speed assignment over the path points.

    ``spline_points`` is a list of :class:`ControlPoint` or an ``(N, 3)`` array
    of ``x, y, kappa``.
    """
    if len(spline_points) and isinstance(spline_points[0], ControlPoint):
        arr = np.array([(p.position.x, p.position.y, p.kappa) for p in spline_points], dtype=float)
    else:
        arr = np.asarray(spline_points, dtype=float)
    n = len(arr)
    if n < 2:
        raise TooFewPoints("velocity profile needs at least 2 points")
    gaps = np.hypot(*np.diff(arr[:, :2], axis=0).T).tolist()
    abs_k = np.abs(arr[:, 2])
    with np.errstate(divide="ignore"):
        cap = np.where(abs_k > 0, np.sqrt(limits.a_y_max / np.where(abs_k > 0, abs_k, 1.0)), np.inf).tolist()
    v_min, v_max = limits.v_min, limits.v_max

    fwd = [0.0] * n
    # the seed is capped by the first point's curvature too, or the ramp to point 1
    # would start above the final value at point 0
    fwd[0] = max(v_min, min(v_max, v_seed, cap[0]))
    for i in range(1, n):
        v_g = math.sqrt(fwd[i - 1] ** 2 + 2.0 * gaps[i - 1] * limits.a_x_max)
        fwd[i] = max(v_min, min(v_max, v_g, cap[i]))

    bwd = [0.0] * n
    bwd[-1] = max(v_min, min(cap[-1], v_min))
    for i in range(n - 2, -1, -1):
        v_l = math.sqrt(bwd[i + 1] ** 2 + 2.0 * gaps[i] * limits.a_x_min)
        bwd[i] = max(v_min, min(v_max, v_l, cap[i]))

    forward = np.array(fwd)
    backward = np.array(bwd)
    return VelocityProfile(np.minimum(forward, backward), forward, backward)


def rate_limit(v_meas: float, v_i: float, limits: VelocityLimits) -> float:
    return max(v_meas + limits.da_min, min(v_meas + limits.da_max, v_i))


# ---------------------------------------------------------------------------
# Closed-loop step


@dataclass(frozen=True)
class ControllerConfig:
    gains: StanleyGains = field(default_factory=StanleyGains)
    limits: VelocityLimits = field(default_factory=VelocityLimits)
    planner: PlannerParams = field(default_factory=PlannerParams)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    sensor: SensorConfig = field(default_factory=SensorConfig)


@dataclass(frozen=True, eq=False)
class ControllerMemory:
    """State carried between control steps.

    ``plan_origin`` is the world pose of the sensor when ``spline`` was planned;
    held plans are re-expressed against it by odometry.
    """

    width: WidthProfile = field(default_factory=WidthProfile.empty)
    spline: PathSpline | None = None
    plan_origin: Pose2 | None = None
    failures: int = 0
    prev_delta_measured: float | None = None
    status: str = "init"
    lookahead: ControlPoint | None = None


def control_step(
    state: VehicleState,
    scan: LidarScan,
    memory: ControllerMemory,
    config: ControllerConfig,
) -> tuple[ControlCommand, ControllerMemory]:
    limits = config.limits
    sensor_world = compose(state.pose, config.sensor.mount_offset)
    prev_delta = state.delta_measured if memory.prev_delta_measured is None else memory.prev_delta_measured
    try:
        spline, width = plan_pipeline(scan, memory.width, config.planner)
        origin, failures, status = sensor_world, 0, "ok"
    except PLANNER_ERRORS:
        failures = memory.failures + 1
        if memory.spline is None or failures > HOLD_BUDGET:
            degraded = replace(
                memory, failures=failures, status="degraded", prev_delta_measured=state.delta_measured, lookahead=None
            )
            return ControlCommand(0.0, limits.v_min), degraded
        spline, width, origin, status = memory.spline, memory.width, memory.plan_origin, "hold"

    ego_pose = relative(origin, state.pose)
    ego = replace(state, pose=ego_pose)
    fa = front_axle(ego_pose, config.vehicle.wheelbase)
    s_foot = project_to_spline(spline, fa)
    cp = compute_lookahead(spline, s_foot, config.gains)
    errors = lateral_errors(ego, fa, cp, prev_delta, state.v)
    dmax = config.vehicle.delta_max
    delta = min(max(stanley_steering(errors, state.v, config.gains), -dmax), dmax)

    profile = fit_velocity_profile(knot_control_points(spline), state.v, limits)
    ahead = int(np.searchsorted(spline.s_knots, s_foot, side="right"))
    v_ref = float(profile.v[min(ahead, len(profile.v) - 1)])
    v_target = rate_limit(state.v, v_ref, limits)

    new_memory = ControllerMemory(
        width=width,
        spline=spline,
        plan_origin=origin,
        failures=failures,
        prev_delta_measured=state.delta_measured,
        status=status,
        lookahead=cp,
    )
    return ControlCommand(delta, v_target), new_memory
