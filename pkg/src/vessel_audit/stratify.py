"""Per-pixel width strata from the ground-truth distance transform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image

from .edt import DistanceMap, euclidean_distance_transform
from .masks import MaskError, as_mask


class Stratum(IntEnum):
    BACKGROUND = 0
    THIN = 1
    MEDIUM = 2
    THICK = 3


STRATA = (Stratum.THIN, Stratum.MEDIUM, Stratum.THICK)
STRATUM_NAMES = ("thin", "medium", "thick")


@dataclass(frozen=True)
class StratumThresholds:
    """Half-width cut points: thin is ``d < thin_below``, thick is ``d > thick_above``."""

    thin_below: float = 3.0
    thick_above: float = 7.0

    def __post_init__(self):
        if not (0 < self.thin_below and (self.thin_below <= self.thick_above or math.isinf(self.thin_below))):
            raise MaskError(
                f"invalid stratum thresholds {self.thin_below}, {self.thick_above}"
            )

    @classmethod
    def parse(cls, text: str) -> "StratumThresholds":
        """Parse ``"3,7"``."""
        try:
            lo, hi = (float(t) for t in text.split(","))
        except ValueError as exc:
            raise MaskError(f"strata must look like '3,7', got {text!r}") from exc
        return cls(lo, hi)


def stratify(
    dmap: DistanceMap, gt: np.ndarray, thresholds: StratumThresholds = StratumThresholds()
) -> np.ndarray:
    """Label every ground-truth vessel pixel Thin/Medium/Thick; background stays 0.

    Comparisons run on the exact squared distances, so a distance of
    exactly 3 (offset (3, 0)) lands in Medium.
    """
    gt = as_mask(gt)
    if dmap.shape != gt.shape:
        raise MaskError(f"size mismatch: distance map {dmap.shape} vs mask {gt.shape}")
    sq = dmap.squared
    labels = np.zeros(gt.shape, dtype=np.uint8)
    labels[gt] = Stratum.MEDIUM
    labels[gt & (sq < thresholds.thin_below**2)] = Stratum.THIN
    labels[gt & (sq > thresholds.thick_above**2) & (labels != Stratum.THIN)] = Stratum.THICK
    return labels


def stratify_mask(gt: np.ndarray, thresholds: StratumThresholds = StratumThresholds()) -> np.ndarray:
    """EDT followed by stratification; a mask with no vessel pixels yields all background."""
    gt = as_mask(gt)
    if not gt.any():
        return np.zeros(gt.shape, dtype=np.uint8)
    return stratify(euclidean_distance_transform(gt), gt, thresholds)


def stratum_counts(labels: np.ndarray) -> dict[str, int]:
    counts = np.bincount(np.asarray(labels).ravel(), minlength=4)
    return {name: int(counts[s]) for name, s in zip(STRATUM_NAMES, STRATA)}


_PALETTE = [0, 0, 0, 255, 0, 0, 0, 255, 0, 0, 0, 255]


def save_labels_png(labels: np.ndarray, path: str | Path) -> None:
    """Paletted PNG: background black, thin red, medium green, thick blue."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    img = Image.frombytes("P", (labels.shape[1], labels.shape[0]), labels.tobytes())
    img.putpalette(_PALETTE + [0] * (768 - len(_PALETTE)))
    img.save(path)
