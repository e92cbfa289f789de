"""One declarative configuration document covering every pipeline default.

Unknown keys are rejected and each value is range-checked against the
precondition of the module that consumes it. CLI flags override file values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import dataset, gridmap, planner
from .errors import InvalidParameterError
from .fusion import ClassPolicy, URBAN_POLICY

__all__ = ["PipelineConfig"]


@dataclass
class PipelineConfig:
    camera_height: float = dataset.DEFAULT_CAMERA_HEIGHT
    horizon: float = dataset.DEFAULT_HORIZON
    n_prompts: int = dataset.DEFAULT_N_PROMPTS
    min_area_fraction: float = dataset.DEFAULT_MIN_AREA_FRACTION
    policy: ClassPolicy = field(default_factory=lambda: URBAN_POLICY)
    binarize_threshold: float = 0.5
    zero_weight: float = 0.05
    map_size: tuple[float, float] = gridmap.DEFAULT_SIZE
    map_resolution: float = gridmap.DEFAULT_RESOLUTION
    step_max: float = gridmap.DEFAULT_STEP_MAX
    slope_max: float = gridmap.DEFAULT_SLOPE_MAX
    w_geo: float = planner.DEFAULT_W_GEO
    w_sem: float = planner.DEFAULT_W_SEM
    hard_geo_threshold: float = planner.DEFAULT_HARD_GEO_THRESHOLD
    goal_tolerance: float = planner.DEFAULT_GOAL_TOLERANCE
    waypoint_distance: float = planner.DEFAULT_WAYPOINT_DISTANCE
    rrt_step_size: float = 0.25
    rrt_r_max: float = 1.0
    rrt_gamma: float = 6.0
    rrt_goal_bias: float = 0.05
    iterations: int = 5000
    seed: int = dataset.DEFAULT_SPLIT_SEED
    jobs: int = 1

    def __post_init__(self):
        positive = [
            "camera_height",
            "horizon",
            "map_resolution",
            "step_max",
            "slope_max",
            "goal_tolerance",
            "waypoint_distance",
            "rrt_step_size",
            "rrt_r_max",
            "rrt_gamma",
        ]
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.n_prompts < 1:
            raise InvalidParameterError("n_prompts must be >= 1")
        if not 0 <= self.min_area_fraction <= 1:
            raise InvalidParameterError("min_area_fraction must be in [0, 1]")
        if not 0 <= self.binarize_threshold <= 1:
            raise InvalidParameterError("binarize_threshold must be in [0, 1]")
        if self.zero_weight < 0:
            raise InvalidParameterError("zero_weight must be non-negative")
        if self.w_geo < 0 or self.w_sem < 0:
            raise InvalidParameterError("weights must be non-negative")
        if not 0 <= self.hard_geo_threshold <= 1:
            raise InvalidParameterError("hard_geo_threshold must be in [0, 1]")
        if not 0 <= self.rrt_goal_bias < 1:
            raise InvalidParameterError("rrt_goal_bias must be in [0, 1)")
        if self.iterations < 1:
            raise InvalidParameterError("iterations must be >= 1")
        if self.jobs < 1:
            raise InvalidParameterError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "policy" in kwargs and not isinstance(kwargs["policy"], ClassPolicy):
            kwargs["policy"] = ClassPolicy.from_dict(kwargs["policy"])
        if "map_size" in kwargs:
            kwargs["map_size"] = tuple(kwargs["map_size"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
