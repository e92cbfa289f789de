"""Per-frame annotation orchestration, dataset emission and the point-label baseline.

Frames are pre-extracted images matched to trajectory keyframes by sorted
filename order: the i-th file in the frames directory pairs with keyframe i.
The trajectory may contain more keyframes than there are frames; the extra
keyframes only feed footsteps into the horizon windows of earlier frames.
"""

from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyDatasetError, InvalidParameterError
from .fusion import ClassPolicy, refine_label, save_label
from .geometry import (
    CameraModel,
    PixelPoints,
    Trajectory,
    extract_footsteps,
    farthest_point_sample,
    project_points,
    select_window,
)
from .maskproc import area_filter, contour_filter, select_mask_index

logger = logging.getLogger(__name__)

__all__ = [
    "AnnotationJob",
    "DatasetTuple",
    "annotate_frame",
    "run_job",
    "point_label_baseline",
    "to_grayscale",
]

DEFAULT_CAMERA_HEIGHT = 1.36
DEFAULT_HORIZON = 3.0
DEFAULT_N_PROMPTS = 3
DEFAULT_MIN_AREA_FRACTION = 0.02
DEFAULT_SPLIT_SEED = 42
VAL_FRACTION = 0.1

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


@dataclass
class AnnotationJob:
    frames: list[Path]
    trajectory: Trajectory
    camera: CameraModel
    prompt_segmenter: object  # .segment(image, prompts, frame_index) -> MaskProposalSet
    semantic_segmenter: object  # .segment(image, frame_index) -> SemanticMap
    policy: ClassPolicy
    camera_height: float = DEFAULT_CAMERA_HEIGHT
    horizon: float = DEFAULT_HORIZON
    n_prompts: int = DEFAULT_N_PROMPTS
    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION
    workspace: Path | None = None  # where gray images for the prompt model go

    def __post_init__(self):
        if self.camera_height <= 0:
            raise InvalidParameterError("camera_height must be positive")
        if self.horizon <= 0:
            raise InvalidParameterError("horizon must be positive")
        if self.n_prompts < 1:
            raise InvalidParameterError("n_prompts must be >= 1")

    @property
    def frame_count(self) -> int:
        return min(len(self.frames), len(self.trajectory))


@dataclass
class DatasetTuple:
    image: Path
    label: np.ndarray
    frame_index: int
    prompts: list[tuple[float, float]]
    mask_id: int  # index into the area-filtered proposal set


def list_frames(frames_dir: str | Path) -> list[Path]:
    files = sorted(
        p for p in Path(frames_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    return files


def to_grayscale(image_path: str | Path) -> np.ndarray:
    """ITU-R 601 luma (0.299 R + 0.587 G + 0.114 B) as a uint8 raster."""
    with Image.open(image_path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.rint(luma).astype(np.uint8)


def annotate_frame(job: AnnotationJob, frame_index: int) -> DatasetTuple | None:
    """Run the full annotation chain for one keyframe.

    Returns None (skip) when no footstep projects into the image or no mask
    proposal survives filtering.
    """
    if not 0 <= frame_index < job.frame_count:
        raise IndexError(f"frame_index {frame_index} out of range")
    frame_path = job.frames[frame_index]
    if not frame_path.exists():
        raise FileNotFoundError(frame_path)

    window = select_window(job.trajectory, frame_index, job.horizon)
    window_poses = Trajectory(tuple(job.trajectory[j] for j in window))
    footsteps = extract_footsteps(window_poses, job.camera_height)
    pixels = project_points(
        footsteps, job.trajectory[frame_index], job.camera, frame_index=frame_index
    )
    if len(pixels) == 0:
        logger.info("frame %d: no footstep projects in-image, skipping", frame_index)
        return None
    prompts = farthest_point_sample(pixels, job.n_prompts)

    # The prompt model is color-sensitive; it always sees the gray image.
    gray_path = _gray_image_path(job, frame_index)
    proposals = job.prompt_segmenter.segment(gray_path, prompts, frame_index)
    surviving = area_filter(proposals, job.min_area_fraction)
    if len(surviving) == 0:
        logger.info("frame %d: no proposal survived the area filter, skipping", frame_index)
        return None
    mask_id = select_mask_index(surviving, prompts)
    mask = contour_filter(surviving.masks[mask_id])

    semantic = job.semantic_segmenter.segment(frame_path, frame_index)
    label = refine_label(mask, semantic, pixels, job.policy)
    return DatasetTuple(
        image=frame_path,
        label=label,
        frame_index=frame_index,
        prompts=[(float(u), float(v)) for u, v in prompts.points],
        mask_id=mask_id,
    )


def _gray_image_path(job: AnnotationJob, frame_index: int) -> Path:
    if job.workspace is None:
        return job.frames[frame_index]
    gray_dir = job.workspace / "gray"
    gray_dir.mkdir(parents=True, exist_ok=True)
    out = gray_dir / f"frame{frame_index:06d}.png"
    if not out.exists():
        Image.fromarray(to_grayscale(job.frames[frame_index]), mode="L").save(out)
    return out


def run_job(
    job: AnnotationJob,
    out_dir: str | Path,
    seed: int = DEFAULT_SPLIT_SEED,
    jobs: int = 1,
) -> dict:
    """Annotate every frame, write labels and a manifest with a seeded
    0.9/0.1 train/val split. Returns the manifest dict; re-running with the
    same inputs produces byte-identical files."""
    out_dir = Path(out_dir)
    labels_dir = out_dir / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    if job.workspace is None:
        job.workspace = out_dir

    indices = list(range(job.frame_count))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda i: annotate_frame(job, i), indices))
    else:
        results = [annotate_frame(job, i) for i in indices]

    tuples = []
    skipped = []
    for i, result in zip(indices, results):
        if result is None:
            skipped.append(i)
            continue
        label_path = labels_dir / f"frame{i:06d}.png"
        save_label(
            result.label,
            label_path,
            reduced_value=job.policy.reduced_value,
            full_value=job.policy.full_value,
        )
        tuples.append(
            {
                "frame_index": i,
                "image": _relative_or_absolute(result.image, out_dir),
                "label": str(label_path.relative_to(out_dir)),
                "prompts": [[u, v] for u, v in result.prompts],
                "mask_id": result.mask_id,
            }
        )
    if not tuples:
        raise EmptyDatasetError("annotation produced zero dataset tuples")

    annotated = [t["frame_index"] for t in tuples]
    rng = random.Random(seed)
    shuffled = annotated.copy()
    rng.shuffle(shuffled)
    n_val = round(len(shuffled) * VAL_FRACTION)
    val = sorted(shuffled[:n_val])
    train = sorted(shuffled[n_val:])

    manifest = {
        "config": {
            "camera_height": job.camera_height,
            "horizon": job.horizon,
            "n_prompts": job.n_prompts,
            "min_area_fraction": job.min_area_fraction,
            "policy": job.policy.to_dict(),
            "split_seed": seed,
        },
        "camera": {
            "fx": job.camera.fx,
            "fy": job.camera.fy,
            "cx": job.camera.cx,
            "cy": job.camera.cy,
            "width": job.camera.width,
            "height": job.camera.height,
        },
        "counts": {
            "frames": job.frame_count,
            "tuples": len(tuples),
            "skipped": len(skipped),
        },
        "tuples": tuples,
        "train": train,
        "val": val,
        "skipped": skipped,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return manifest


def _relative_or_absolute(path: Path, base: Path) -> str:
    try:
        return str(path.resolve().relative_to(base.resolve()))
    except ValueError:
        return str(path)


def point_label_baseline(
    footsteps: PixelPoints, radius: float, size: tuple[int, int]
) -> np.ndarray:
    """Disc of the given pixel radius around every projected footstep.

    `size` is (width, height). radius 0 marks just the pixel containing each
    footstep.
    """
    if radius < 0:
        raise InvalidParameterError("radius must be non-negative")
    width, height = size
    out = np.zeros((height, width), dtype=np.float64)
    if len(footsteps) == 0:
        return out
    if radius == 0:
        cols = np.floor(footsteps.points[:, 0]).astype(int)
        rows = np.floor(footsteps.points[:, 1]).astype(int)
        inside = (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
        out[rows[inside], cols[inside]] = 1.0
        return out
    for u, v in footsteps.points:
        c0 = max(0, int(np.floor(u - radius)))
        c1 = min(width - 1, int(np.ceil(u + radius)))
        r0 = max(0, int(np.floor(v - radius)))
        r1 = min(height - 1, int(np.ceil(v + radius)))
        if c1 < c0 or r1 < r0:
            continue
        cols = np.arange(c0, c1 + 1)
        rows = np.arange(r0, r1 + 1)
        d2 = (cols[None, :] - u) ** 2 + (rows[:, None] - v) ** 2
        out[r0 : r1 + 1, c0 : c1 + 1][d2 <= radius**2] = 1.0
    return out
