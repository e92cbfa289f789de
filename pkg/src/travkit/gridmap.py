"""Robot-centric 2.5D dual-layer grid mapping.

The map stores height and semantic-traversability layers (float32, NaN as
the no-data sentinel) plus a derived geometric-traversability layer and a
per-cell point count. Cell (ix, iy) covers the world square
[origin_x + ix*res, origin_x + (ix+1)*res) x [origin_y + iy*res, ...);
layers are arrays of shape (ny, nx) indexed [iy, ix].

Serialization: magic ``TGM1``, a little-endian uint32 header length, a UTF-8
JSON header (size, resolution, origin, cells, layer list, point counters)
and the listed layers as row-major 32-bit floats.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidParameterError, ShapeMismatchError
from .geometry import CameraModel, Pose, unproject_points

__all__ = [
    "TravGridMap",
    "LabeledPoints",
    "unproject",
    "accumulate",
    "geometric_traversability",
    "recenter",
    "save_map",
    "load_map",
    "load_depth",
    "save_depth",
]

MAGIC = b"TGM1"

DEFAULT_SIZE = (10.0, 10.0)
DEFAULT_RESOLUTION = 0.025
DEFAULT_STEP_MAX = 0.15
DEFAULT_SLOPE_MAX = 0.6

# Offsets of the 8-neighborhood, (dy, dx).
_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass
class LabeledPoints:
    """World-frame 3-D points carrying a traversability value each."""

    xyz: np.ndarray  # (N, 3)
    values: np.ndarray  # (N,)

    def __post_init__(self):
        self.xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(self.xyz) != len(self.values):
            raise ShapeMismatchError(
                f"{len(self.xyz)} points but {len(self.values)} values"
            )

    def __len__(self) -> int:
        return len(self.xyz)


class TravGridMap:
    """2.5D grid map with height, semantic and geometric layers."""

    def __init__(
        self,
        size: tuple[float, float] = DEFAULT_SIZE,
        resolution: float = DEFAULT_RESOLUTION,
        origin: tuple[float, float] = (0.0, 0.0),
    ):
        if resolution <= 0:
            raise InvalidParameterError("resolution must be positive")
        nx = size[0] / resolution
        ny = size[1] / resolution
        if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9:
            raise InvalidParameterError(
                f"size {size} is not an integer multiple of resolution {resolution}"
            )
        self.size = (float(size[0]), float(size[1]))
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        self.nx = int(round(nx))
        self.ny = int(round(ny))
        shape = (self.ny, self.nx)
        self.height = np.full(shape, np.nan, dtype=np.float32)
        self.semantic = np.full(shape, np.nan, dtype=np.float32)
        self.geometric = np.full(shape, np.nan, dtype=np.float32)
        self.count = np.zeros(shape, dtype=np.float32)
        self.points_binned = 0
        self.points_dropped = 0

    @classmethod
    def centered_at(
        cls,
        center: tuple[float, float],
        size: tuple[float, float] = DEFAULT_SIZE,
        resolution: float = DEFAULT_RESOLUTION,
    ) -> "TravGridMap":
        origin = (center[0] - size[0] / 2, center[1] - size[1] / 2)
        return cls(size=size, resolution=resolution, origin=origin)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(ix, iy) of the cell containing the world point; may be out of range."""
        ix = int(np.floor((x - self.origin[0]) / self.resolution))
        iy = int(np.floor((y - self.origin[1]) / self.resolution))
        return ix, iy

    def contains(self, x: float, y: float) -> bool:
        ix, iy = self.cell_of(x, y)
        return 0 <= ix < self.nx and 0 <= iy < self.ny

    def copy(self) -> "TravGridMap":
        """Snapshot for concurrent readers (planners)."""
        out = TravGridMap(self.size, self.resolution, self.origin)
        out.height = self.height.copy()
        out.semantic = self.semantic.copy()
        out.geometric = self.geometric.copy()
        out.count = self.count.copy()
        out.points_binned = self.points_binned
        out.points_dropped = self.points_dropped
        return out


def unproject(
    depth: np.ndarray,
    trav: np.ndarray,
    camera: CameraModel,
    pose: Pose,
) -> LabeledPoints:
    """Lift valid-depth pixels into labeled world points.

    depth is in meters with 0 (or NaN) marking invalid pixels.
    """
    depth = np.asarray(depth, dtype=np.float64)
    trav = np.asarray(trav, dtype=np.float64)
    if depth.shape != trav.shape:
        raise ShapeMismatchError(
            f"depth shape {depth.shape} != traversability shape {trav.shape}"
        )
    valid = np.isfinite(depth) & (depth > 0)
    if not valid.any():
        return LabeledPoints(np.empty((0, 3)), np.empty(0))
    rows, cols = np.nonzero(valid)
    pixels = np.stack([cols.astype(np.float64), rows.astype(np.float64)], axis=1)
    world = unproject_points(pixels, depth[valid], pose, camera)
    return LabeledPoints(world, trav[valid])


def accumulate(grid: TravGridMap, points: LabeledPoints) -> TravGridMap:
    """Bin labeled points into the map; per cell, the highest point wins
    (ties go to the last-processed point). Points outside the extent are
    dropped and counted."""
    n = len(points)
    if n == 0:
        return grid
    ix = np.floor((points.xyz[:, 0] - grid.origin[0]) / grid.resolution).astype(np.int64)
    iy = np.floor((points.xyz[:, 1] - grid.origin[1]) / grid.resolution).astype(np.int64)
    inside = (ix >= 0) & (ix < grid.nx) & (iy >= 0) & (iy < grid.ny)
    n_in = int(np.count_nonzero(inside))
    grid.points_binned += n_in
    grid.points_dropped += n - n_in
    if n_in == 0:
        return grid
    ix, iy = ix[inside], iy[inside]
    heights = points.xyz[inside, 2]
    values = points.values[inside]
    flat = iy * grid.nx + ix
    # Sort by (cell, height, arrival order); the last entry of each cell
    # group is that cell's winner.
    seq = np.arange(n_in)
    order = np.lexsort((seq, heights, flat))
    flat_sorted = flat[order]
    is_last = np.r_[flat_sorted[1:] != flat_sorted[:-1], True]
    winners = order[is_last]
    grid.height.ravel()[flat[winners]] = heights[winners]
    grid.semantic.ravel()[flat[winners]] = values[winners]
    grid.count += np.bincount(flat, minlength=grid.nx * grid.ny).reshape(
        grid.ny, grid.nx
    )
    return grid


def geometric_traversability(
    grid: TravGridMap,
    step_max: float = DEFAULT_STEP_MAX,
    slope_max: float = DEFAULT_SLOPE_MAX,
) -> TravGridMap:
    """Derive the geometric layer from terrain heights.

    Per cell: step = max |height difference| over 8-neighbors with data,
    slope = arctan(step / resolution); the cell is geometrically traversable
    (1) iff step <= step_max and slope <= slope_max. Cells without height
    data stay no-data; cells with no informative neighbor default to 1.
    """
    h = grid.height.astype(np.float64)
    padded = np.pad(h, 1, constant_values=np.nan)
    step = np.full(h.shape, np.nan)
    for dy, dx in _NEIGHBORS:
        neighbor = padded[1 + dy : 1 + dy + grid.ny, 1 + dx : 1 + dx + grid.nx]
        diff = np.abs(h - neighbor)
        step = np.where(np.isnan(step), diff, np.fmax(step, diff))
    has_data = np.isfinite(h)
    geo = np.full(h.shape, np.nan, dtype=np.float32)
    # No informative neighbor: nothing argues against traversing.
    geo[has_data & np.isnan(step)] = 1.0
    known = has_data & np.isfinite(step)
    slope = np.arctan(step[known] / grid.resolution)
    ok = (step[known] <= step_max) & (slope <= slope_max)
    geo[known] = ok.astype(np.float32)
    grid.geometric = geo
    return grid


def recenter(grid: TravGridMap, new_center: tuple[float, float]) -> TravGridMap:
    """Shift the map origin (snapped to whole cells) so it is centered on the
    given point; cell values in the overlapping region are preserved."""
    target_origin_x = new_center[0] - grid.size[0] / 2
    target_origin_y = new_center[1] - grid.size[1] / 2
    shift_x = round((target_origin_x - grid.origin[0]) / grid.resolution)
    shift_y = round((target_origin_y - grid.origin[1]) / grid.resolution)
    if shift_x == 0 and shift_y == 0:
        return grid

    def shifted(layer: np.ndarray, fill: float) -> np.ndarray:
        out = np.full_like(layer, fill)
        src_y = slice(max(0, shift_y), min(grid.ny, grid.ny + shift_y))
        src_x = slice(max(0, shift_x), min(grid.nx, grid.nx + shift_x))
        dst_y = slice(max(0, -shift_y), max(0, -shift_y) + (src_y.stop - src_y.start))
        dst_x = slice(max(0, -shift_x), max(0, -shift_x) + (src_x.stop - src_x.start))
        if src_y.stop > src_y.start and src_x.stop > src_x.start:
            out[dst_y, dst_x] = layer[src_y, src_x]
        return out

    grid.height = shifted(grid.height, np.nan)
    grid.semantic = shifted(grid.semantic, np.nan)
    grid.geometric = shifted(grid.geometric, np.nan)
    grid.count = shifted(grid.count, 0.0)
    grid.origin = (
        grid.origin[0] + shift_x * grid.resolution,
        grid.origin[1] + shift_y * grid.resolution,
    )
    return grid


def save_map(grid: TravGridMap, path: str | Path) -> None:
    layers = ["height", "semantic", "geometric", "count"]
    header = {
        "size": list(grid.size),
        "resolution": grid.resolution,
        "origin": list(grid.origin),
        "cells": [grid.nx, grid.ny],
        "layers": layers,
        "points_binned": grid.points_binned,
        "points_dropped": grid.points_dropped,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name in layers:
            f.write(np.ascontiguousarray(getattr(grid, name), dtype="<f4").tobytes())


def load_map(path: str | Path) -> TravGridMap:
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise InvalidParameterError(f"{path} is not a grid map container")
        (header_len,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(header_len).decode("utf-8"))
        grid = TravGridMap(
            size=tuple(header["size"]),
            resolution=header["resolution"],
            origin=tuple(header["origin"]),
        )
        n = grid.nx * grid.ny
        for name in header["layers"]:
            data = np.frombuffer(f.read(4 * n), dtype="<f4").reshape(grid.ny, grid.nx)
            setattr(grid, name, data.copy())
        grid.points_binned = int(header.get("points_binned", 0))
        grid.points_dropped = int(header.get("points_dropped", 0))
    return grid


def load_depth(path: str | Path) -> np.ndarray:
    """Read a 16-bit millimeter depth PNG into meters (0 stays invalid)."""
    with Image.open(path) as img:
        mm = np.asarray(img, dtype=np.float64)
    return mm / 1000.0


def save_depth(depth_m: np.ndarray, path: str | Path) -> None:
    """Write a meter depth raster as a 16-bit millimeter PNG."""
    mm = np.clip(np.rint(np.nan_to_num(np.asarray(depth_m)) * 1000.0), 0, 65535)
    Image.fromarray(mm.astype(np.uint16)).save(path)
