"""Camera poses, footstep extraction, pinhole projection and prompt sampling.

Conventions: the world frame is gravity-aligned (z up) at the initial camera
pose. Pose rotation/position map camera coordinates into world coordinates.
The camera frame follows the usual computer-vision convention: x right,
y down, z forward (optical axis). Pixel coordinates are (u, v) with u along
image width and v along image height; a point with coordinates (u, v) lies
in the pixel with indices (row=floor(v), col=floor(u)).
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import EmptyInputError, InvalidParameterError

DEFAULT_NEAR_PLANE = 0.05  # camera-frame depth below this is treated as invisible

__all__ = [
    "Pose",
    "Trajectory",
    "CameraModel",
    "FootstepSet",
    "PixelPoints",
    "extract_footsteps",
    "select_window",
    "project_points",
    "unproject_points",
    "farthest_point_sample",
    "load_trajectory",
    "save_trajectory",
    "load_camera",
    "save_camera",
]


@dataclass(frozen=True)
class Pose:
    """A time-stamped SE(3) keyframe pose (camera-to-world)."""

    timestamp: float
    rotation: np.ndarray  # (3, 3)
    position: np.ndarray  # (3,)

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        if self.rotation.shape != (3, 3):
            raise InvalidParameterError(f"rotation must be 3x3, got {self.rotation.shape}")
        if self.position.shape != (3,):
            raise InvalidParameterError(f"position must be a 3-vector, got {self.position.shape}")
        err = np.linalg.norm(self.rotation.T @ self.rotation - np.eye(3))
        if err > 1e-9:
            raise InvalidParameterError(f"rotation is not orthonormal (||R^T R - I|| = {err:.3e})")
        if np.linalg.det(self.rotation) < 0:
            raise InvalidParameterError("rotation has negative determinant (not a proper rotation)")

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous camera-to-world transform."""
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T


@dataclass(frozen=True)
class Trajectory:
    """Ordered keyframe poses with strictly increasing timestamps."""

    keyframes: tuple[Pose, ...]

    def __post_init__(self):
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        if not self.keyframes:
            raise EmptyInputError("trajectory must contain at least one keyframe")
        ts = self.timestamps
        if np.any(np.diff(ts) <= 0):
            raise InvalidParameterError("trajectory timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.keyframes)

    def __getitem__(self, index: int) -> Pose:
        return self.keyframes[index]

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([p.timestamp for p in self.keyframes])

    @property
    def positions(self) -> np.ndarray:
        return np.stack([p.position for p in self.keyframes])


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics for rectified images."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidParameterError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidParameterError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class FootstepSet:
    """Approximate ground points under the camera, in world coordinates."""

    points_world: np.ndarray  # (N, 3)

    def __post_init__(self):
        pts = np.asarray(self.points_world, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points_world", pts)

    def __len__(self) -> int:
        return len(self.points_world)


@dataclass(frozen=True)
class PixelPoints:
    """Sub-pixel image points tied to the keyframe they were projected into."""

    points: np.ndarray  # (M, 2) as (u, v)
    frame_index: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


def extract_footsteps(trajectory: Trajectory, camera_height: float) -> FootstepSet:
    """Drop each keyframe position straight down by the camera mount height.

    The world frame is gravity-aligned, so orientation plays no role.
    """
    if camera_height <= 0:
        raise InvalidParameterError(f"camera_height must be positive, got {camera_height}")
    pts = trajectory.positions - np.array([0.0, 0.0, camera_height])
    return FootstepSet(pts)


def select_window(trajectory: Trajectory, frame_index: int, horizon: float) -> range:
    """Indices of keyframes with timestamps in [t(frame_index), t(frame_index) + horizon]."""
    if not 0 <= frame_index < len(trajectory):
        raise IndexError(f"frame_index {frame_index} out of range [0, {len(trajectory) - 1}]")
    if horizon <= 0:
        raise InvalidParameterError(f"horizon must be positive, got {horizon}")
    ts = trajectory.timestamps
    t0 = ts[frame_index]
    end = bisect_right(ts.tolist(), t0 + horizon)
    return range(frame_index, end)


def project_points(
    points_world: FootstepSet,
    pose: Pose,
    camera: CameraModel,
    frame_index: int = 0,
    near_plane: float = DEFAULT_NEAR_PLANE,
) -> PixelPoints:
    """Project world points into the image of the given keyframe.

    Points behind the near plane or outside the image bounds are dropped;
    the result may be empty.
    """
    pts = points_world.points_world
    if len(pts) == 0:
        return PixelPoints(np.empty((0, 2)), frame_index)
    cam = (pts - pose.position) @ pose.rotation  # rows: R^T (p - t)
    z = cam[:, 2]
    visible = z > near_plane
    cam = cam[visible]
    z = z[visible]
    u = camera.fx * cam[:, 0] / z + camera.cx
    v = camera.fy * cam[:, 1] / z + camera.cy
    inside = (u >= 0) & (u < camera.width) & (v >= 0) & (v < camera.height)
    return PixelPoints(np.stack([u[inside], v[inside]], axis=1), frame_index)


def unproject_points(
    pixels: np.ndarray, depths: np.ndarray, pose: Pose, camera: CameraModel
) -> np.ndarray:
    """Lift (u, v) pixels with camera-frame depths back to world points."""
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    depths = np.asarray(depths, dtype=np.float64).reshape(-1)
    x = (pixels[:, 0] - camera.cx) / camera.fx * depths
    y = (pixels[:, 1] - camera.cy) / camera.fy * depths
    cam = np.stack([x, y, depths], axis=1)
    return cam @ pose.rotation.T + pose.position


def farthest_point_sample(points: PixelPoints, count: int) -> PixelPoints:
    """Greedy max-min subset selection in pixel space.

    The seed is the lowest point in the image (greatest v), ties broken by
    smallest u; later ties in the max-min step keep the earliest input index.
    Output order is selection order. If the input has at most `count` points
    they are all returned in their original order.
    """
    if len(points) == 0:
        raise EmptyInputError("cannot sample from an empty point set")
    if count < 1:
        raise InvalidParameterError(f"count must be >= 1, got {count}")
    pts = points.points
    n = len(pts)
    if n <= count:
        return points
    # Seed selection: max v, then min u. Negate u so lexsort's descending
    # order on the primary key keeps the smallest u among ties.
    seed = int(np.lexsort((pts[:, 0], -pts[:, 1]))[0])
    selected = [seed]
    min_d2 = np.sum((pts - pts[seed]) ** 2, axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(min_d2))
        selected.append(nxt)
        d2 = np.sum((pts - pts[nxt]) ** 2, axis=1)
        min_d2 = np.minimum(min_d2, d2)
    return PixelPoints(pts[selected], points.frame_index)


def load_trajectory(path: str | Path) -> Trajectory:
    """Parse a TUM-format trajectory file.

    One keyframe per line: ``timestamp tx ty tz qx qy qz qw`` (quaternion
    w-last). Blank lines and ``#`` comments are skipped.
    """
    poses = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        vals = [float(x) for x in line.split()]
        if len(vals) != 8:
            raise InvalidParameterError(
                f"trajectory line must have 8 fields (t tx ty tz qx qy qz qw), got {len(vals)}"
            )
        t, tx, ty, tz, qx, qy, qz, qw = vals
        R = Rotation.from_quat([qx, qy, qz, qw]).as_matrix()
        poses.append(Pose(t, R, np.array([tx, ty, tz])))
    return Trajectory(tuple(poses))


def save_trajectory(trajectory: Trajectory, path: str | Path) -> None:
    """Write a trajectory in TUM format (quaternion w-last)."""
    lines = []
    for p in trajectory.keyframes:
        q = Rotation.from_matrix(p.rotation).as_quat()  # (x, y, z, w)
        vals = [p.timestamp, *p.position, *q]
        lines.append(" ".join(f"{v:.9f}" for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def load_camera(path: str | Path) -> CameraModel:
    """Load pinhole intrinsics from a JSON file with keys fx, fy, cx, cy, width, height."""
    raw = json.loads(Path(path).read_text())
    try:
        return CameraModel(
            fx=float(raw["fx"]),
            fy=float(raw["fy"]),
            cx=float(raw["cx"]),
            cy=float(raw["cy"]),
            width=int(raw["width"]),
            height=int(raw["height"]),
        )
    except KeyError as exc:
        raise InvalidParameterError(f"camera file missing key {exc}") from exc


def save_camera(camera: CameraModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "fx": camera.fx,
                "fy": camera.fy,
                "cx": camera.cx,
                "cy": camera.cy,
                "width": camera.width,
                "height": camera.height,
            },
            indent=2,
        )
        + "\n"
    )
