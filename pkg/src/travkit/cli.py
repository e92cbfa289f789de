"""travkit command line: annotate / evaluate / map / plan / simulate-fixtures.

Exit codes: 0 success, 1 domain error (skip-only jobs, planning failure,
bad inputs), 2 usage error. The TRAVKIT_LOG environment variable selects
log verbosity (error|warn|info|debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .dataset import AnnotationJob, list_frames, run_job
from .errors import TravkitError
from .fixtures import simulate_fixtures
from .fusion import ClassPolicy, load_label
from .geometry import load_camera, load_trajectory
from .gridmap import (
    TravGridMap,
    accumulate,
    geometric_traversability,
    load_depth,
    load_map,
    save_map,
    unproject,
)
from .metrics import evaluate_batch
from .planner import PlanQuery, RRTStarParams, plan
from .protocol import (
    FixturePromptSegmenter,
    FixtureSemanticSegmenter,
    SubprocessPromptSegmenter,
    SubprocessSemanticSegmenter,
)

logger = logging.getLogger("travkit")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("TRAVKIT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for name in (
        "camera_height",
        "horizon",
        "n_prompts",
        "min_area_fraction",
        "binarize_threshold",
        "seed",
        "jobs",
        "iterations",
    ):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        config = replace(config, **overrides)
    return config


def _cmd_annotate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    trajectory = load_trajectory(args.trajectory)
    camera = load_camera(args.camera)
    policy = (
        ClassPolicy.from_dict(json.loads(Path(args.policy).read_text()))
        if args.policy
        else config.policy
    )
    if args.fixture_masks:
        prompt_seg = FixturePromptSegmenter(args.fixture_masks)
        semantic_seg = FixtureSemanticSegmenter(args.fixture_masks)
    elif args.prompt_adapter and args.semantic_adapter:
        prompt_seg = SubprocessPromptSegmenter(args.prompt_adapter.split())
        semantic_seg = SubprocessSemanticSegmenter(args.semantic_adapter.split())
    else:
        print(
            "error: provide --fixture-masks or both --prompt-adapter and --semantic-adapter",
            file=sys.stderr,
        )
        return 2
    job = AnnotationJob(
        frames=list_frames(args.frames),
        trajectory=trajectory,
        camera=camera,
        prompt_segmenter=prompt_seg,
        semantic_segmenter=semantic_seg,
        policy=policy,
        camera_height=config.camera_height,
        horizon=config.horizon,
        n_prompts=config.n_prompts,
        min_area_fraction=config.min_area_fraction,
    )
    try:
        manifest = run_job(job, args.out, seed=config.seed, jobs=config.jobs)
    finally:
        prompt_seg.close()
        semantic_seg.close()
    counts = manifest["counts"]
    print(
        f"annotated {counts['tuples']} frames ({counts['skipped']} skipped) -> {args.out}"
    )
    return 0


def _collect_rasters(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(Path(directory).glob("*.png"))}


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    preds = _collect_rasters(args.pred)
    gts = _collect_rasters(args.gt)
    shared = sorted(set(preds) & set(gts))
    if not shared:
        raise TravkitError("no matching prediction/ground-truth file names")
    pairs = ((load_label(preds[name]), load_label(gts[name])) for name in shared)
    report = evaluate_batch(pairs, binarize_threshold=config.binarize_threshold)
    payload = report.to_dict()
    payload["images"] = len(shared)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(text)
    return 0


def _cmd_map(args: argparse.Namespace) -> int:
    config = _load_config(args)
    trajectory = load_trajectory(args.trajectory)
    camera = load_camera(args.camera)
    depth_files = sorted(Path(args.depth).glob("*.png"))
    trav_files = sorted(Path(args.trav).glob("*.png"))
    n = min(len(depth_files), len(trav_files), len(trajectory))
    if n == 0:
        raise TravkitError("no depth/traversability frames to fuse")
    first = trajectory[0].position
    grid = TravGridMap.centered_at(
        (float(first[0]), float(first[1])),
        size=config.map_size,
        resolution=config.map_resolution,
    )
    for i in range(n):
        depth = load_depth(depth_files[i])
        trav = load_label(trav_files[i])
        points = unproject(depth, trav, camera, trajectory[i])
        accumulate(grid, points)
    geometric_traversability(grid, step_max=config.step_max, slope_max=config.slope_max)
    save_map(grid, args.out)
    print(
        f"fused {n} frames: {grid.points_binned} points binned, "
        f"{grid.points_dropped} dropped -> {args.out}"
    )
    return 0


def _parse_pose2d(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,yaw")
    return parts[0], parts[1], parts[2]


def _cmd_plan(args: argparse.Namespace) -> int:
    config = _load_config(args)
    grid = load_map(args.map)
    sx, sy, syaw = args.start
    gx, gy, gyaw = args.goal
    query = PlanQuery(
        start=(sx, sy),
        goal=(gx, gy),
        start_yaw=syaw,
        goal_yaw=gyaw,
        goal_tolerance=config.goal_tolerance,
        w_geo=config.w_geo,
        w_sem=config.w_sem,
        hard_geo_threshold=config.hard_geo_threshold,
    )
    params = RRTStarParams(
        step_size=config.rrt_step_size,
        r_max=config.rrt_r_max,
        gamma=config.rrt_gamma,
        goal_bias=config.rrt_goal_bias,
    )
    path = plan(grid, query, budget=config.iterations, seed=config.seed, params=params)
    if path is None:
        print("planning failed: no node reached the goal tolerance", file=sys.stderr)
        return 1
    payload = {
        "waypoints": [[float(x), float(y)] for x, y in path.waypoints],
        "total_cost": path.total_cost,
        "length": path.length,
        "goal_yaw": path.goal_yaw,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    if args.overlay:
        _render_overlay(grid, path, args.overlay)
    print(f"path with {len(path.waypoints)} waypoints, length {path.length:.3f} m, "
          f"cost {path.total_cost:.3f} -> {args.out}")
    return 0


def _render_overlay(grid: TravGridMap, path, out_path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    extent = (
        grid.origin[0],
        grid.origin[0] + grid.size[0],
        grid.origin[1],
        grid.origin[1] + grid.size[1],
    )
    fig, axes = plt.subplots(1, 3, figsize=(15, 5))
    for ax, layer, title in zip(
        axes, (grid.height, grid.semantic, grid.geometric), ("height", "semantic", "geometric")
    ):
        im = ax.imshow(layer, origin="lower", extent=extent, cmap="viridis")
        ax.plot(path.waypoints[:, 0], path.waypoints[:, 1], "r-", linewidth=2)
        ax.plot(*path.waypoints[0], "go", markersize=6)
        ax.plot(*path.waypoints[-1], "r*", markersize=10)
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def _cmd_simulate_fixtures(args: argparse.Namespace) -> int:
    paths = simulate_fixtures(args.out)
    for name, p in sorted(paths.items()):
        print(f"{name}: {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="travkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"travkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="auto-label frames from a trajectory")
    p.add_argument("--frames", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--height", dest="camera_height", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--prompts", dest="n_prompts", type=int)
    p.add_argument("--policy")
    p.add_argument("--out", required=True)
    p.add_argument("--fixture-masks", dest="fixture_masks")
    p.add_argument("--prompt-adapter", dest="prompt_adapter")
    p.add_argument("--semantic-adapter", dest="semantic_adapter")
    p.add_argument("--min-area-fraction", dest="min_area_fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--threshold", dest="binarize_threshold", type=float)
    p.add_argument("--report")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("map", help="fuse depth + traversability into a 2.5D grid map")
    p.add_argument("--depth", required=True)
    p.add_argument("--trav", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("plan", help="RRT* path planning on a grid map")
    p.add_argument("--map", required=True)
    p.add_argument("--start", required=True, type=_parse_pose2d)
    p.add_argument("--goal", required=True, type=_parse_pose2d)
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", dest="iterations", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--overlay")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("simulate-fixtures", help="generate the bundled synthetic sequence")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate_fixtures)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except TravkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
