"""Kinematics, force capacity and gait placement for a morphing five-bar robot leg."""

from .analysis import (
    Direction,
    EmptyWorkspace,
    FieldKind,
    GridSpec,
    KindMismatch,
    ScalarField,
    WorkspaceResult,
    condition_field,
    max_force_field,
    sample_workspace,
    sweep_workspace,
    workspace_area,
)
from .gait import (
    FootPath,
    JointTrajectory,
    NoFeasiblePlacement,
    PathPlacement,
    Phase,
    average_drag_force,
    generate_stance_path,
    optimize_path_placement,
    trajectory_export,
)
from .linkage import (
    DEFAULT_MODE,
    Degenerate,
    ElbowPoint,
    FkBranch,
    FootState,
    ForceVector,
    JointSolution,
    LinkageError,
    LinkLengths,
    PlanarJacobian,
    Singular,
    TorquePair,
    Unreachable,
    WorkingMode,
    condition_number,
    foot_velocity,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    joint_velocity,
    required_torque,
    static_force,
)
from .morph import (
    PRESETS,
    TABLE_CONFIGS,
    ComparisonReport,
    InfeasibleStep,
    ModePreset,
    MorphPlan,
    compare_configurations,
    morph_plan,
    preset,
)

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "DEFAULT_MODE",
    "Degenerate",
    "Direction",
    "ElbowPoint",
    "EmptyWorkspace",
    "FieldKind",
    "FkBranch",
    "FootPath",
    "FootState",
    "ForceVector",
    "GridSpec",
    "InfeasibleStep",
    "JointSolution",
    "JointTrajectory",
    "KindMismatch",
    "LinkLengths",
    "LinkageError",
    "ModePreset",
    "MorphPlan",
    "NoFeasiblePlacement",
    "PRESETS",
    "PathPlacement",
    "Phase",
    "PlanarJacobian",
    "ScalarField",
    "Singular",
    "TABLE_CONFIGS",
    "TorquePair",
    "Unreachable",
    "WorkingMode",
    "WorkspaceResult",
    "average_drag_force",
    "compare_configurations",
    "condition_field",
    "condition_number",
    "foot_velocity",
    "forward_kinematics",
    "generate_stance_path",
    "inverse_kinematics",
    "jacobian",
    "joint_velocity",
    "max_force_field",
    "morph_plan",
    "optimize_path_placement",
    "preset",
    "required_torque",
    "sample_workspace",
    "static_force",
    "sweep_workspace",
    "trajectory_export",
    "workspace_area",
]
