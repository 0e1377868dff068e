"""
Resize protocol and condition sizes.

Both kernels use the half-pixel-centre convention: destination pixel ``i``
sits at source coordinate ``(i + 0.5) * src / dst - 0.5``. Images are
interpolated bilinearly with replicate clamping at the edges; masks copy
the nearest source pixel, and exact ties between two source pixels go
to the lower index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .masks import MaskError, Size2D, as_mask, as_probability
from .stratify import STRATA, STRATUM_NAMES


@dataclass(frozen=True)
class ConditionSpec:
    """A named processing condition: either a scale factor in (0, 1] or an explicit size."""

    name: str
    scale: float | None = None
    size: Size2D | None = None

    def __post_init__(self):
        if (self.scale is None) == (self.size is None):
            raise MaskError(f"condition {self.name}: give exactly one of scale or size")
        if self.scale is not None and not 0.0 < self.scale <= 1.0:
            raise MaskError(f"condition {self.name}: scale must lie in (0, 1], got {self.scale}")
        if self.size is not None:
            object.__setattr__(self, "size", Size2D(*self.size).validate())

    def processed_size(self, native: Size2D) -> Size2D:
        if self.size is not None:
            return self.size
        size = Size2D(math.floor(native.width * self.scale), math.floor(native.height * self.scale))
        if size.width < 1 or size.height < 1:
            raise MaskError(f"condition {self.name}: {native} at scale {self.scale} is empty")
        return size

    def to_dict(self) -> dict:
        if self.scale is not None:
            return {"name": self.name, "scale": self.scale}
        return {"name": self.name, "size": {"width": self.size.width, "height": self.size.height}}

    @classmethod
    def from_dict(cls, doc: dict) -> "ConditionSpec":
        if "size" in doc:
            s = doc["size"]
            return cls(str(doc["name"]), size=Size2D(int(s["width"]), int(s["height"])))
        return cls(str(doc["name"]), scale=float(doc["scale"]))


CANONICAL_SCALES = (
    ConditionSpec("R1", 1.0),
    ConditionSpec("R2", 0.75),
    ConditionSpec("R3", 0.5),
    ConditionSpec("R4", 0.25),
)

_R5_512 = ConditionSpec("R5", size=Size2D(512, 512))

PRESETS: dict[str, dict[str, tuple[ConditionSpec, ...]]] = {
    "paper-table2": {
        "DRIVE": CANONICAL_SCALES + (_R5_512,),
        "STARE": CANONICAL_SCALES + (_R5_512,),
        "CHASE_DB1": CANONICAL_SCALES + (_R5_512,),
        "HRF": CANONICAL_SCALES + (_R5_512,),
        "FIVES": CANONICAL_SCALES[:3]
        + (ConditionSpec("R4", size=Size2D(512, 512)), ConditionSpec("R5", size=Size2D(256, 256))),
    },
}

# native sizes of the datasets covered by the built-in preset
NATIVE_SIZES = {
    "DRIVE": Size2D(565, 584),
    "STARE": Size2D(700, 605),
    "CHASE_DB1": Size2D(1280, 960),
    "HRF": Size2D(3504, 2336),
    "FIVES": Size2D(2048, 2048),
}


def preset_conditions(preset: str, dataset: str) -> tuple[ConditionSpec, ...]:
    """Conditions of a named preset for one dataset; unknown datasets get R1-R4 scales."""
    try:
        table = PRESETS[preset]
    except KeyError:
        raise MaskError(f"unknown condition preset {preset!r}") from None
    return table.get(dataset.upper(), CANONICAL_SCALES)


def load_conditions(path: str | Path) -> list[ConditionSpec]:
    """Read a JSON list of ``{"name", "scale"}`` / ``{"name", "size": {...}}`` objects."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        doc = doc.get("conditions", [])
    conditions = [ConditionSpec.from_dict(d) for d in doc]
    if not conditions:
        raise MaskError(f"{path}: no conditions")
    if len({c.name for c in conditions}) != len(conditions):
        raise MaskError(f"{path}: duplicate condition names")
    return conditions


def condition_sizes(native: Size2D, conditions) -> list[tuple[str, Size2D]]:
    return [(c.name, c.processed_size(native)) for c in conditions]


def _bilinear_axis(n_src: int, n_dst: int):
    scale = n_src / n_dst
    coord = (np.arange(n_dst, dtype=np.float64) + 0.5) * scale - 0.5
    coord = np.clip(coord, 0.0, n_src - 1)
    i0 = np.floor(coord).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_src - 1)
    return i0, i1, coord - i0


def resize_bilinear(img: np.ndarray, target: Size2D) -> np.ndarray:
    """Separable bilinear resize of a probability map / intensity image."""
    img = as_probability(img)
    target = Size2D(*target).validate()
    h, w = img.shape
    if (w, h) == tuple(target):
        return img.copy()
    y0, y1, fy = _bilinear_axis(h, target.height)
    x0, x1, fx = _bilinear_axis(w, target.width)
    # a + f * (b - a) keeps constant regions exactly constant
    top, bot = img[y0], img[y1]
    rows = top + fy[:, None] * (bot - top)
    left, right = rows[:, x0], rows[:, x1]
    out = left + fx[None, :] * (right - left)
    return np.clip(out, img.min(), img.max())


def nearest_indices(n_src: int, n_dst: int) -> np.ndarray:
    """Source index per destination index, computed in exact integer arithmetic.

    ``ceil((2i + 1) * n_src / (2 * n_dst)) - 1``: the source pixel whose span
    contains the destination centre, with boundary points going to the lower pixel.
    """
    i = np.arange(n_dst, dtype=np.int64)
    num = (2 * i + 1) * n_src
    den = 2 * n_dst
    return (-(-num // den) - 1).astype(np.intp)


def resize_nearest(mask: np.ndarray, target: Size2D) -> np.ndarray:
    mask = as_mask(mask)
    target = Size2D(*target).validate()
    h, w = mask.shape
    rows = nearest_indices(h, target.height)
    cols = nearest_indices(w, target.width)
    return mask[np.ix_(rows, cols)]


@dataclass
class DecimationRow:
    condition: str
    processed_size: Size2D
    retention: dict[str, float | None]
    pixels_lost: dict[str, int]
    stratum_pixels: dict[str, int] = field(default_factory=dict)


def decimation_audit(gt: np.ndarray, labels: np.ndarray, conditions) -> list[DecimationRow]:
    """Nearest-neighbour round trip of the ground truth through each processed size.

    Retention of a stratum is the fraction of its pixels that are still
    foreground after downsizing and resizing back to native; ``None``
    when the stratum is empty.
    """
    gt = as_mask(gt)
    labels = np.asarray(labels)
    if labels.shape != gt.shape:
        raise MaskError(f"size mismatch: labels {labels.shape} vs mask {gt.shape}")
    if ((labels != 0) != gt).any():
        raise MaskError("labels do not match the ground-truth mask")
    native = Size2D.of(gt)
    report = []
    for name, size in condition_sizes(native, conditions):
        back = resize_nearest(resize_nearest(gt, size), native)
        retention, lost, totals = {}, {}, {}
        for sname, s in zip(STRATUM_NAMES, STRATA):
            member = labels == s
            total = int(member.sum())
            kept = int((back & member).sum())
            totals[sname] = total
            lost[sname] = total - kept
            retention[sname] = kept / total if total else None
        report.append(DecimationRow(name, size, retention, lost, totals))
    return report
