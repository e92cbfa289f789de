"""Post-processing of promptable-segmentation mask proposals.

Masks are boolean numpy rasters of shape (height, width). On disk they are
single-channel 8-bit PNGs with 0 = false and 255 = true.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import (
    EmptyMaskError,
    InvalidParameterError,
    NoCandidateError,
    ShapeMismatchError,
)
from .geometry import PixelPoints

__all__ = [
    "MaskProposalSet",
    "area_filter",
    "select_mask",
    "select_mask_index",
    "contour_filter",
    "load_mask",
    "save_mask",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class MaskProposalSet:
    """Candidate binary masks with optional confidence scores (default 1.0)."""

    masks: list[np.ndarray]
    scores: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.masks = [np.asarray(m, dtype=bool) for m in self.masks]
        if not self.scores:
            self.scores = [1.0] * len(self.masks)
        if len(self.scores) != len(self.masks):
            raise ShapeMismatchError(
                f"{len(self.masks)} masks but {len(self.scores)} scores"
            )
        shapes = {m.shape for m in self.masks}
        if len(shapes) > 1:
            raise ShapeMismatchError(f"proposals have mixed shapes: {shapes}")

    def __len__(self) -> int:
        return len(self.masks)


def area_filter(proposals: MaskProposalSet, min_area_fraction: float) -> MaskProposalSet:
    """Keep proposals whose true-pixel count is at least the given image fraction."""
    if not 0 <= min_area_fraction <= 1:
        raise InvalidParameterError(
            f"min_area_fraction must be in [0, 1], got {min_area_fraction}"
        )
    kept_masks, kept_scores = [], []
    for mask, score in zip(proposals.masks, proposals.scores):
        if mask.sum() >= min_area_fraction * mask.size:
            kept_masks.append(mask)
            kept_scores.append(score)
    return MaskProposalSet(kept_masks, kept_scores)


def _coverage(mask: np.ndarray, prompts: PixelPoints) -> int:
    """Number of prompt points whose containing pixel is true."""
    if len(prompts) == 0:
        return 0
    h, w = mask.shape
    cols = np.floor(prompts.points[:, 0]).astype(int)
    rows = np.floor(prompts.points[:, 1]).astype(int)
    inside = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    return int(mask[rows[inside], cols[inside]].sum())


def select_mask_index(proposals: MaskProposalSet, prompts: PixelPoints) -> int:
    """Index of the proposal covering the most prompt points.

    Ties break by higher score, then larger area, then mask content so the
    choice never depends on proposal ordering.
    """
    if len(proposals) == 0:
        raise NoCandidateError("no mask proposals to select from")

    def key(i: int):
        m = proposals.masks[i]
        return (
            _coverage(m, prompts),
            proposals.scores[i],
            int(m.sum()),
            np.packbits(m).tobytes(),
        )

    return max(range(len(proposals)), key=key)


def select_mask(proposals: MaskProposalSet, prompts: PixelPoints) -> np.ndarray:
    return proposals.masks[select_mask_index(proposals, prompts)]


def contour_filter(mask: np.ndarray) -> np.ndarray:
    """Keep only the largest 8-connected component of the mask.

    Equal areas break toward the component whose first pixel in row-major
    (v, u) order comes first.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("mask has no true pixels")
    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if n == 1:
        return mask.copy()
    flat = labels.ravel()
    sizes = np.bincount(flat)
    sizes[0] = 0
    tied = np.flatnonzero(sizes == sizes.max())
    if len(tied) == 1:
        keep = int(tied[0])
    else:
        # Row-major first occurrence realizes the (v, u) lexicographic tie-break.
        first_seen = {int(lbl): int(np.argmax(flat == lbl)) for lbl in tied}
        keep = min(first_seen, key=first_seen.get)
    return labels == keep


def load_mask(path: str | Path) -> np.ndarray:
    """Read a binary mask PNG (0 = false, nonzero = true)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) > 0


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a boolean raster as an 8-bit PNG with values {0, 255}."""
    data = (np.asarray(mask, dtype=bool) * np.uint8(255))
    Image.fromarray(data, mode="L").save(path)
