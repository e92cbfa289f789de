"""Bundled synthetic walking sequence for adapter-free pipeline runs.

The scene is a straight walk past a sidewalk / road / crosswalk layout. All
rasters are generated deterministically, so annotation runs over the fixture
are byte-reproducible. Expected labels are computed here with closed-form
projection arithmetic and plain boolean set algebra on the known region
rectangles, independent of the pipeline modules they are used to check.

The walker keeps to the sidewalk for the first seconds, then swerves onto
the road, so both refinement branches (full-value and graded road) occur.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.spatial.transform import Rotation

from .fusion import save_label
from .gridmap import save_depth

__all__ = ["FIXTURE_CAMERA", "simulate_fixtures", "expected_labels"]

WIDTH, HEIGHT = 320, 240
FX, FY = 150.0, 151.0
CX, CY = 160.0, 120.0
CAMERA_HEIGHT = 1.36
HORIZON = 3.0
N_KEYFRAMES = 17
N_FRAMES = 10
KEYFRAME_DT = 0.5
WALK_SPEED = 1.0  # m/s along +x
SWERVE_Y = -1.27  # lateral offset once the walker moves onto the road
SWERVE_FROM_KEYFRAME = 7

FIXTURE_CAMERA = {
    "fx": FX,
    "fy": FY,
    "cx": CX,
    "cy": CY,
    "width": WIDTH,
    "height": HEIGHT,
}

# Image-space scene regions (rows, cols are half-open ranges).
GROUND_ROWS = (140, 240)
SIDEWALK_COLS = (100, 220)
ROAD_COLS = (220, 320)
CROSSWALK_ROWS = (180, 220)
CROSSWALK_COLS = (220, 284)

VOCABULARY = {0: "background", 1: "sidewalk", 2: "road", 3: "crosswalk"}
POLICY = {
    "add_classes": ["crosswalk"],
    "remove_classes": ["road"],
    "road_like_classes": ["road"],
    "reduced_value": 0.25,
    "full_value": 1.0,
    "inclusion_threshold": 0.7,
}

MIN_DEPTH_ROW = 131  # nearer rows would exceed the 16-bit millimeter range


def _rect(rows: tuple[int, int], cols: tuple[int, int]) -> np.ndarray:
    out = np.zeros((HEIGHT, WIDTH), dtype=bool)
    out[rows[0] : rows[1], cols[0] : cols[1]] = True
    return out


def _regions() -> dict[str, np.ndarray]:
    sidewalk = _rect(GROUND_ROWS, SIDEWALK_COLS)
    road_band = _rect(GROUND_ROWS, ROAD_COLS)
    crosswalk = _rect(CROSSWALK_ROWS, CROSSWALK_COLS)
    return {
        "sidewalk": sidewalk,
        "road_band": road_band,
        "crosswalk": crosswalk,
        "road_class": road_band & ~crosswalk,
        "both_band": sidewalk | road_band,
    }


def _keyframe_position(k: int) -> tuple[float, float, float]:
    x = WALK_SPEED * KEYFRAME_DT * k
    y = SWERVE_Y if k >= SWERVE_FROM_KEYFRAME else 0.0
    return x, y, CAMERA_HEIGHT


def _camera_rotation() -> np.ndarray:
    # Columns: image-right = -y_world, image-down = -z_world, optical = +x_world.
    return np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


def _footstep_pixels(frame: int) -> list[tuple[float, float]]:
    """Closed-form projection of the visible window footsteps for a frame."""
    xi, yi, _ = _keyframe_position(frame)
    pixels = []
    for j in range(frame, N_KEYFRAMES):
        if (j - frame) * KEYFRAME_DT > HORIZON:
            break
        xj, yj, _ = _keyframe_position(j)
        dx = xj - xi
        if dx <= 0:
            continue
        u = CX + FX * (yi - yj) / dx
        v = CY + FY * CAMERA_HEIGHT / dx
        if 0 <= u < WIDTH and 0 <= v < HEIGHT:
            pixels.append((u, v))
    return pixels


def expected_labels() -> list[np.ndarray]:
    """Ground-truth label rasters, one per frame, from scene arithmetic."""
    regions = _regions()
    proposals = [
        (regions["sidewalk"], 0.95),
        (regions["road_band"], 0.90),
        (regions["both_band"], 0.60),
    ]
    labels = []
    for i in range(N_FRAMES):
        pix = _footstep_pixels(i)
        cells = [(int(np.floor(v)), int(np.floor(u))) for u, v in pix]

        def covered(mask: np.ndarray) -> int:
            return sum(mask[r, c] for r, c in cells)

        mask = max(proposals, key=lambda p: (covered(p[0]), p[1]))[0]
        remaining = (mask | regions["crosswalk"]) & ~regions["road_class"]
        inside = sum(remaining[r, c] for r, c in cells) / len(cells)
        label = np.zeros((HEIGHT, WIDTH), dtype=np.float64)
        if inside >= POLICY["inclusion_threshold"]:
            label[remaining] = 1.0
        else:
            label[mask & regions["road_class"]] = 0.25
            label[(mask & ~regions["road_class"]) | regions["crosswalk"]] = 1.0
        labels.append(label)
    return labels


def _frame_image() -> np.ndarray:
    """A plausible RGB rendering of the scene regions."""
    regions = _regions()
    img = np.zeros((HEIGHT, WIDTH, 3), dtype=np.uint8)
    img[:, :] = (150, 180, 210)  # sky / background
    img[GROUND_ROWS[0] :, :] = (70, 90, 60)  # verge
    img[regions["sidewalk"]] = (185, 180, 175)
    img[regions["road_class"]] = (95, 95, 100)
    img[regions["crosswalk"]] = (230, 230, 230)
    # crosswalk stripes
    for c in range(CROSSWALK_COLS[0], CROSSWALK_COLS[1], 16):
        img[CROSSWALK_ROWS[0] : CROSSWALK_ROWS[1], c : c + 8] = (120, 120, 125)
    return img


def _depth_image() -> np.ndarray:
    rows = np.arange(HEIGHT, dtype=np.float64)
    depth_col = np.zeros(HEIGHT)
    below = rows >= MIN_DEPTH_ROW
    depth_col[below] = CAMERA_HEIGHT * FY / (rows[below] - CY)
    return np.repeat(depth_col[:, None], WIDTH, axis=1)


def simulate_fixtures(out_dir: str | Path) -> dict[str, Path]:
    """Write the full fixture tree; returns the created paths."""
    out = Path(out_dir)
    frames_dir = out / "frames"
    adapters_dir = out / "adapters"
    gt_dir = out / "gt"
    depth_dir = out / "depth"
    for d in (frames_dir, adapters_dir, gt_dir, depth_dir):
        d.mkdir(parents=True, exist_ok=True)

    regions = _regions()

    # Trajectory (TUM format) and camera intrinsics.
    quat = Rotation.from_matrix(_camera_rotation()).as_quat()
    lines = []
    for k in range(N_KEYFRAMES):
        x, y, z = _keyframe_position(k)
        t = k * KEYFRAME_DT
        lines.append(
            " ".join(f"{val:.9f}" for val in (t, x, y, z, *quat))
        )
    trajectory_path = out / "trajectory.txt"
    trajectory_path.write_text("\n".join(lines) + "\n")
    camera_path = out / "camera.json"
    camera_path.write_text(json.dumps(FIXTURE_CAMERA, indent=2) + "\n")
    policy_path = out / "policy.json"
    policy_path.write_text(json.dumps(POLICY, indent=2) + "\n")

    # Mask proposals: a tiny blob (area-filtered), the sidewalk band plus a
    # disconnected speck (contour-filtered), the road band, and an overgrown
    # union of both bands.
    noise = np.zeros((HEIGHT, WIDTH), dtype=bool)
    noise[5:15, 5:15] = True
    sidewalk_speck = regions["sidewalk"].copy()
    sidewalk_speck[2:5, 300:303] = True
    proposal_masks = [noise, sidewalk_speck, regions["road_band"], regions["both_band"]]
    scores = [0.99, 0.95, 0.90, 0.60]

    frame_rgb = _frame_image()
    depth = _depth_image()
    semantic = np.zeros((HEIGHT, WIDTH), dtype=np.uint8)
    semantic[regions["sidewalk"]] = 1
    semantic[regions["road_class"]] = 2
    semantic[regions["crosswalk"]] = 3

    gt = expected_labels()
    for i in range(N_FRAMES):
        Image.fromarray(frame_rgb, mode="RGB").save(frames_dir / f"frame{i:06d}.png")
        save_depth(depth, depth_dir / f"frame{i:06d}.png")
        stem = f"frame{i:06d}"
        for k, mask in enumerate(proposal_masks):
            Image.fromarray((mask * np.uint8(255)), mode="L").save(
                adapters_dir / f"{stem}_mask{k}.png"
            )
        (adapters_dir / f"{stem}_scores.json").write_text(json.dumps(scores) + "\n")
        Image.fromarray(semantic, mode="L").save(adapters_dir / f"{stem}_semantic.png")
        save_label(gt[i], gt_dir / f"{stem}.png")
    (adapters_dir / "vocabulary.json").write_text(
        json.dumps({str(k): v for k, v in VOCABULARY.items()}, indent=2) + "\n"
    )

    return {
        "frames": frames_dir,
        "adapters": adapters_dir,
        "gt": gt_dir,
        "depth": depth_dir,
        "trajectory": trajectory_path,
        "camera": camera_path,
        "policy": policy_path,
    }
