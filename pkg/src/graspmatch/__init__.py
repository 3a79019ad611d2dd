"""Grasp-pose planning from oriented point clouds.

Two decoupled stages: surface-normal histogram matching selects promising
gripper orientations, then FFT cross-correlation of voxel grids locates
collision-free placements that are verified against local surface normals.
"""

from .cloud import OrientedCloud, estimate_normals, load_cloud, merge_clouds
from .errors import GraspMatchError
from .models import (
    GraspTypeModel,
    builtin_model,
    lateral_model,
    load_model,
    power_model,
    save_model,
    tripodal_model,
)
from .planner import (
    GraspPlanResult,
    PlannerConfig,
    plan_grasps,
    save_result,
    serialize_result,
)
from .verify import GraspPose

__version__ = "0.1.0"

__all__ = [
    "GraspMatchError",
    "GraspPlanResult",
    "GraspPose",
    "GraspTypeModel",
    "OrientedCloud",
    "PlannerConfig",
    "builtin_model",
    "estimate_normals",
    "lateral_model",
    "load_cloud",
    "load_model",
    "merge_clouds",
    "plan_grasps",
    "power_model",
    "save_model",
    "save_result",
    "serialize_result",
    "tripodal_model",
    "__version__",
]
