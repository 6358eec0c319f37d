"""Gait sequence discovery for legged robots.

Thin wrapper over the C++ core: CEM-MD over contact schedules, with single
rigid body trajectory optimization as the inner problem.
"""

from ._core import (
    SingularConfiguration,
    RobotModel,
    __version__,
    admissible_count,
    admissible_distinct_count,
    decode,
    duration_index,
    emit_plot_data,
    euler_rate_matrix,
    load_robot,
    percentile,
    rotation_from_euler,
    run_scenario_json,
    self_check,
    solve_pose_task,
)

__all__ = [
    "SingularConfiguration",
    "RobotModel",
    "__version__",
    "admissible_count",
    "admissible_distinct_count",
    "decode",
    "duration_index",
    "emit_plot_data",
    "euler_rate_matrix",
    "load_robot",
    "percentile",
    "rotation_from_euler",
    "run_scenario_json",
    "self_check",
    "solve_pose_task",
]
