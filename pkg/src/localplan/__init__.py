"""Local trajectory planning without absolute localization.

The planner never sees a global coordinate: each frame it re-expresses its
previous plan in the new vehicle frame using a dead-reckoned pose delta from
noisy speed / yaw-rate measurements, replans over a sampled Frenet candidate
set, and a Lyapunov-style monitor tracks convergence toward a stop target.
A ground-truth simulator closes the loop and grades the result.
"""

from .collision import BoxFootprint, obb_overlap
from .frenet import (
    ConversionError,
    FrenetState,
    cartesian_to_frenet,
    frenet_to_cartesian,
)
from .loop import (
    CoverageError,
    PlannerConfig,
    PlanResult,
    StartState,
    cold_start,
    extract_start_state,
    plan_frame,
)
from .motion import (
    EstimationError,
    MotionSample,
    PoseDelta,
    SensorErrorModel,
    ZERO_ERROR,
    dead_reckon_imu,
    dead_reckon_wheel,
    estimation_error,
    sample_measurements,
)
from .planner import (
    CandidateTrajectory,
    CostWeights,
    Limits,
    NoFeasibleTrajectory,
    generate_candidates,
    select_best,
)
from .reference_line import ReferenceLine
from .runner import RunConfig, RunResult, run
from .scenario_io import ScenarioError, load_scenario
from .se2 import (
    TRAJECTORY_DT,
    IDENTITY,
    LocalTrajectory,
    Pose2,
    TrajectoryPoint,
    compose,
    interpolate_state,
    invert,
    relative,
    transform_trajectory,
    wrap_angle,
)
from .sim import Scenario, SimulationFault, WorldState, init_world, perceive, step_world
from .stability import (
    StabilityBounds,
    StabilityRecord,
    analyze_trace,
    check_convergence_condition,
    delta_v,
    lyapunov_value,
    make_record,
    toy_orbit_sim,
)

__version__ = "0.1.0"

__all__ = [
    "BoxFootprint",
    "CandidateTrajectory",
    "ConversionError",
    "CostWeights",
    "CoverageError",
    "EstimationError",
    "FrenetState",
    "IDENTITY",
    "Limits",
    "LocalTrajectory",
    "MotionSample",
    "NoFeasibleTrajectory",
    "PlanResult",
    "PlannerConfig",
    "Pose2",
    "PoseDelta",
    "ReferenceLine",
    "RunConfig",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SensorErrorModel",
    "SimulationFault",
    "StabilityBounds",
    "StabilityRecord",
    "StartState",
    "TRAJECTORY_DT",
    "TrajectoryPoint",
    "WorldState",
    "ZERO_ERROR",
    "analyze_trace",
    "cartesian_to_frenet",
    "check_convergence_condition",
    "cold_start",
    "compose",
    "dead_reckon_imu",
    "dead_reckon_wheel",
    "delta_v",
    "estimation_error",
    "extract_start_state",
    "frenet_to_cartesian",
    "generate_candidates",
    "init_world",
    "interpolate_state",
    "invert",
    "load_scenario",
    "lyapunov_value",
    "make_record",
    "obb_overlap",
    "perceive",
    "plan_frame",
    "relative",
    "run",
    "sample_measurements",
    "select_best",
    "step_world",
    "toy_orbit_sim",
    "transform_trajectory",
    "wrap_angle",
]
