"""travkit: semantic traversability annotation, evaluation, mapping and planning.

Turns egocentric walking video (frames + SLAM keyframe trajectory) into
pixel-wise traversability labels, evaluates predictions, fuses them with
depth into 2.5D grid maps and plans traversability-aware paths. Neural
segmentation models stay behind a subprocess wire protocol (or directory
fixtures), keeping this package fully deterministic.
"""

__version__ = "0.1.0"

from .config import PipelineConfig
from .dataset import AnnotationJob, annotate_frame, point_label_baseline, run_job
from .fusion import (
    ClassPolicy,
    RELLIS_POLICY,
    URBAN_POLICY,
    SemanticMap,
    heuristic_value_map,
    refine_label,
)
from .geometry import (
    CameraModel,
    FootstepSet,
    PixelPoints,
    Pose,
    Trajectory,
    extract_footsteps,
    farthest_point_sample,
    project_points,
    select_window,
)
from .gridmap import TravGridMap, accumulate, geometric_traversability, unproject
from .maskproc import MaskProposalSet, area_filter, contour_filter, select_mask
from .metrics import EvalReport, evaluate, traversability_loss
from .planner import PlannedPath, PlanQuery, edge_cost, plan, waypoint_ahead

__all__ = [
    "__version__",
    "PipelineConfig",
    "AnnotationJob",
    "annotate_frame",
    "run_job",
    "point_label_baseline",
    "ClassPolicy",
    "URBAN_POLICY",
    "RELLIS_POLICY",
    "SemanticMap",
    "refine_label",
    "heuristic_value_map",
    "Pose",
    "Trajectory",
    "CameraModel",
    "FootstepSet",
    "PixelPoints",
    "extract_footsteps",
    "select_window",
    "project_points",
    "farthest_point_sample",
    "MaskProposalSet",
    "area_filter",
    "select_mask",
    "contour_filter",
    "EvalReport",
    "evaluate",
    "traversability_loss",
    "TravGridMap",
    "unproject",
    "accumulate",
    "geometric_traversability",
    "PlanQuery",
    "PlannedPath",
    "edge_cost",
    "plan",
    "waypoint_ahead",
]
