"""LiDAR-only local planning and Stanley control for small racing cars, with a 2D simulator."""

from .control import (
    ControllerConfig,
    ControllerMemory,
    StanleyGains,
    VelocityLimits,
    compute_lookahead,
    control_step,
    fit_velocity_profile,
    lateral_errors,
    rate_limit,
    stanley_steering,
)
from .ftg import FtgParams, follow_the_gap
from .geometry import ControlPoint, PathSpline, Point2, Pose2, eval_spline, fit_spline, project_to_spline
from .harness import LapReport, SessionConfig, run_session, run_sweep
from .planning import PlannerParams, SmoothingParams, plan_pipeline
from .simulator import ControlCommand, LidarScan, SensorConfig, Track, VehicleParams, VehicleState
from .tracks import generate_track, load_track, save_track

__version__ = "0.1.0"
