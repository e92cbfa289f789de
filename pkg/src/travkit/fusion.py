"""Semantic refinement of selected masks into traversability label rasters.

A traversability raster is a float array in [0, 1]; annotation outputs only
take the values {0, reduced_value, full_value}. On disk, label rasters are
8-bit PNGs with the code mapping {0 -> 0, reduced -> 64, full -> 255} plus a
sidecar JSON recording the code -> value table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyInputError, InvalidParameterError, ShapeMismatchError
from .geometry import PixelPoints

__all__ = [
    "SemanticMap",
    "ClassPolicy",
    "URBAN_POLICY",
    "RELLIS_POLICY",
    "refine_label",
    "heuristic_value_map",
    "HEURISTIC_SEGFORMER_URBAN",
    "HEURISTIC_MASK2FORMER_URBAN",
    "HEURISTIC_SEGFORMER_RELLIS",
    "HEURISTIC_MASK2FORMER_RELLIS",
    "load_semantic_map",
    "save_semantic_map",
    "load_label",
    "save_label",
]

LABEL_CODE_ZERO = 0
LABEL_CODE_REDUCED = 64
LABEL_CODE_FULL = 255


@dataclass
class SemanticMap:
    """Per-pixel class indices plus the index -> class-name vocabulary."""

    data: np.ndarray  # (H, W) uint8
    vocabulary: dict[int, str]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        self.vocabulary = {int(k): str(v) for k, v in self.vocabulary.items()}
        present = set(np.unique(self.data).tolist())
        missing = present - set(self.vocabulary)
        if missing:
            raise InvalidParameterError(
                f"class indices {sorted(missing)} appear in the map but not in the vocabulary"
            )

    def pixels_of(self, class_names: set[str]) -> np.ndarray:
        """Boolean raster of pixels whose class name is in the given set."""
        out = np.zeros(self.data.shape, dtype=bool)
        for idx, name in self.vocabulary.items():
            if name in class_names:
                out |= self.data == idx
        return out


@dataclass(frozen=True)
class ClassPolicy:
    """How semantic classes steer mask refinement.

    add_classes are unioned into the mask, remove_classes subtracted;
    road_like_classes receive reduced_value when the footstep-inclusion test
    fails.
    """

    add_classes: frozenset[str] = frozenset()
    remove_classes: frozenset[str] = frozenset()
    road_like_classes: frozenset[str] = frozenset()
    reduced_value: float = 0.25
    full_value: float = 1.0
    inclusion_threshold: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "add_classes", frozenset(self.add_classes))
        object.__setattr__(self, "remove_classes", frozenset(self.remove_classes))
        object.__setattr__(self, "road_like_classes", frozenset(self.road_like_classes))
        if not 0 < self.reduced_value < self.full_value <= 1:
            raise InvalidParameterError(
                "policy requires 0 < reduced_value < full_value <= 1"
            )
        if not 0 < self.inclusion_threshold <= 1:
            raise InvalidParameterError("inclusion_threshold must be in (0, 1]")

    @classmethod
    def from_dict(cls, raw: dict) -> "ClassPolicy":
        known = {
            "add_classes",
            "remove_classes",
            "road_like_classes",
            "reduced_value",
            "full_value",
            "inclusion_threshold",
        }
        unknown = set(raw) - known
        if unknown:
            raise InvalidParameterError(f"unknown policy keys: {sorted(unknown)}")
        kwargs = dict(raw)
        for key in ("add_classes", "remove_classes", "road_like_classes"):
            if key in kwargs:
                kwargs[key] = frozenset(kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "add_classes": sorted(self.add_classes),
            "remove_classes": sorted(self.remove_classes),
            "road_like_classes": sorted(self.road_like_classes),
            "reduced_value": self.reduced_value,
            "full_value": self.full_value,
            "inclusion_threshold": self.inclusion_threshold,
        }


# Urban walking setting: crosswalks join the mask, road is subtracted and,
# when the walker had to use it, graded down to 0.25 instead of 1.
URBAN_POLICY = ClassPolicy(
    add_classes=frozenset({"crosswalk", "lane marking - crosswalk"}),
    remove_classes=frozenset({"road"}),
    road_like_classes=frozenset({"road"}),
    reduced_value=0.25,
    full_value=1.0,
    inclusion_threshold=0.7,
)

# Field setting (Rellis3D): vegetation is subtracted; nothing is added back
# and no class is graded down.
RELLIS_POLICY = ClassPolicy(
    add_classes=frozenset(),
    remove_classes=frozenset({"vegetation"}),
    road_like_classes=frozenset(),
    reduced_value=0.25,
    full_value=1.0,
    inclusion_threshold=0.7,
)

# Heuristic class -> value tables for the direct segmentation baselines.
HEURISTIC_SEGFORMER_URBAN = {
    "sidewalk": 1.0,
    "path": 1.0,
    "floor": 1.0,
    "grass": 0.5,
    "sand": 0.5,
    "hill": 0.5,
    "dirt track": 0.5,
    "land": 0.5,
    "earth": 0.5,
    "field": 0.5,
    "road": 0.25,
}
HEURISTIC_MASK2FORMER_URBAN = {
    "pedestrian area": 1.0,
    "sidewalk": 1.0,
    "lane marking - crosswalk": 1.0,
    "sand": 0.5,
    "snow": 0.5,
    "terrain": 0.5,
    "road": 0.25,
    "lane marking - general": 0.25,
}
HEURISTIC_SEGFORMER_RELLIS = {
    "path": 1.0,
    "grass": 1.0,
    "sand": 1.0,
    "dirt track": 1.0,
    "land": 1.0,
    "field": 1.0,
    "hill": 0.5,
    "earth": 0.5,
}
HEURISTIC_MASK2FORMER_RELLIS = {"terrain": 1.0}


def _footstep_fraction_inside(mask: np.ndarray, footsteps: PixelPoints) -> float:
    h, w = mask.shape
    cols = np.floor(footsteps.points[:, 0]).astype(int)
    rows = np.floor(footsteps.points[:, 1]).astype(int)
    inside = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    hits = mask[rows[inside], cols[inside]].sum()
    return float(hits) / len(footsteps)


def refine_label(
    mask: np.ndarray,
    semantic: SemanticMap,
    footsteps: PixelPoints,
    policy: ClassPolicy,
) -> np.ndarray:
    """Fuse a selected mask with semantic classes into the final label raster.

    First the mask is extended by add_classes and cut by remove_classes. If
    enough footsteps fall inside what remains, the remainder becomes
    full_value. Otherwise the walker was on a road-like surface: the
    mask/road overlap gets reduced_value while the rest of the mask plus
    add_classes pixels get full_value.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != semantic.data.shape:
        raise ShapeMismatchError(
            f"mask shape {mask.shape} != semantic shape {semantic.data.shape}"
        )
    if len(footsteps) == 0:
        raise EmptyInputError("refine_label requires at least one projected footstep")

    add_px = semantic.pixels_of(policy.add_classes)
    rem_px = semantic.pixels_of(policy.remove_classes)
    remaining = (mask | add_px) & ~rem_px

    out = np.zeros(mask.shape, dtype=np.float64)
    if _footstep_fraction_inside(remaining, footsteps) >= policy.inclusion_threshold:
        out[remaining] = policy.full_value
    else:
        road_px = semantic.pixels_of(policy.road_like_classes)
        out[mask & road_px] = policy.reduced_value
        out[(mask & ~road_px) | add_px] = policy.full_value
    return out


def heuristic_value_map(semantic: SemanticMap, value_table: dict[str, float]) -> np.ndarray:
    """Per-pixel class -> value lookup; classes absent from the table map to 0."""
    for name, value in value_table.items():
        if not 0 <= value <= 1:
            raise InvalidParameterError(f"value for class {name!r} outside [0, 1]: {value}")
    lut = np.zeros(256, dtype=np.float64)
    for idx, name in semantic.vocabulary.items():
        lut[idx] = value_table.get(name, 0.0)
    return lut[semantic.data]


def load_semantic_map(png_path: str | Path, vocabulary_path: str | Path) -> SemanticMap:
    """Read a class-index PNG plus its sidecar JSON vocabulary."""
    with Image.open(png_path) as img:
        data = np.asarray(img.convert("L"))
    vocab = {int(k): v for k, v in json.loads(Path(vocabulary_path).read_text()).items()}
    return SemanticMap(data, vocab)


def save_semantic_map(
    semantic: SemanticMap, png_path: str | Path, vocabulary_path: str | Path
) -> None:
    Image.fromarray(semantic.data, mode="L").save(png_path)
    Path(vocabulary_path).write_text(
        json.dumps({str(k): v for k, v in sorted(semantic.vocabulary.items())}, indent=2)
        + "\n"
    )


def save_label(
    label: np.ndarray,
    png_path: str | Path,
    reduced_value: float = 0.25,
    full_value: float = 1.0,
) -> None:
    """Encode an annotation label raster as PNG codes {0, 64, 255} + sidecar JSON.

    Every pixel must be one of {0, reduced_value, full_value}.
    """
    label = np.asarray(label, dtype=np.float64)
    codes = np.full(label.shape, -1, dtype=np.int16)
    codes[label == 0.0] = LABEL_CODE_ZERO
    codes[label == reduced_value] = LABEL_CODE_REDUCED
    codes[label == full_value] = LABEL_CODE_FULL
    if (codes < 0).any():
        bad = np.unique(label[codes < 0])
        raise InvalidParameterError(
            f"label contains values outside {{0, {reduced_value}, {full_value}}}: {bad[:5]}"
        )
    Image.fromarray(codes.astype(np.uint8), mode="L").save(png_path)
    sidecar = Path(png_path).with_suffix(".json")
    sidecar.write_text(
        json.dumps(
            {
                str(LABEL_CODE_ZERO): 0.0,
                str(LABEL_CODE_REDUCED): reduced_value,
                str(LABEL_CODE_FULL): full_value,
            },
            indent=2,
        )
        + "\n"
    )


def load_label(png_path: str | Path) -> np.ndarray:
    """Decode a label/prediction PNG into a float raster in [0, 1].

    If a sidecar ``<name>.json`` exists its code -> value table is applied;
    otherwise pixel values are scaled by 1/255 (continuous predictions).
    """
    with Image.open(png_path) as img:
        codes = np.asarray(img.convert("L"))
    sidecar = Path(png_path).with_suffix(".json")
    if sidecar.exists():
        table = {int(k): float(v) for k, v in json.loads(sidecar.read_text()).items()}
        lut = np.zeros(256, dtype=np.float64)
        for code, value in table.items():
            lut[code] = value
        return lut[codes]
    return codes.astype(np.float64) / 255.0
