"""
Deterministic synthetic vessel masks with known widths.

Bands are axis-aligned so their distance profile is known exactly; a
band of height ``h`` peaks at ``ceil(h / 2)``. Band phantoms may hold
several parallel copies at an odd pitch so that every sampling phase of a
2x/4x decimation grid is represented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masks import MaskError, Size2D
from .stratify import StratumThresholds, stratify_mask

SUITE_VERSION = 1
KINDS = ("band", "disk", "ring", "branching-tree")


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    canvas: Size2D
    width: int = 1
    length: int = 0
    radius: int = 0
    count: int = 1
    depth: int = 0
    taper: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MaskError(f"unknown phantom kind {self.kind!r}")
        object.__setattr__(self, "canvas", Size2D(*self.canvas).validate())
        if self.width < 1 or self.count < 1 or self.length < 0 or self.radius < 0:
            raise MaskError("phantom geometry must be positive")
        if self.kind in ("disk", "ring") and self.radius < 1:
            raise MaskError(f"{self.kind} needs a positive radius")
        if self.kind == "ring" and self.width > self.radius:
            raise MaskError("ring thickness exceeds its radius")
        if self.kind == "branching-tree" and (self.depth < 1 or self.length < 1 or not 0 < self.taper <= 1):
            raise MaskError("tree needs depth >= 1, length >= 1 and taper in (0, 1]")

    @property
    def margin(self) -> int:
        return self.radius if self.kind == "disk" else self.width


def band_pitch(width: int) -> int:
    pitch = width + max(width, 4)
    return pitch + 1 if pitch % 2 == 0 else pitch


def _band(spec):
    w, h = spec.canvas
    m = spec.margin
    length = spec.length or (w - 2 * m)
    pitch = band_pitch(spec.width)
    extent = (spec.count - 1) * pitch + spec.width
    mask = np.zeros((h, w), bool)
    half = np.zeros((h, w))
    x0 = (w - length) // 2
    y0 = (h - extent) // 2
    for k in range(spec.count):
        top = y0 + k * pitch
        mask[top : top + spec.width, x0 : x0 + length] = True
    half[mask] = spec.width / 2
    return mask, half


def _radial(spec):
    w, h = spec.canvas
    cy, cx = h // 2, w // 2
    yy, xx = np.mgrid[0:h, 0:w]
    r2 = (yy - cy) ** 2 + (xx - cx) ** 2
    mask = r2 <= spec.radius**2
    if spec.kind == "ring":
        mask &= r2 > (spec.radius - spec.width) ** 2
        nominal = spec.width / 2
    else:
        nominal = spec.radius
    half = np.where(mask, float(nominal), 0.0)
    return mask, half


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    points = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        points.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return points
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _tree(spec):
    w, h = spec.canvas
    rng = np.random.default_rng(spec.seed)
    segments = []

    def grow(x, y, angle, length, width, level):
        x1 = int(round(x + length * math.cos(angle)))
        y1 = int(round(y - length * math.sin(angle)))
        segments.append((x, y, x1, y1, width))
        if level + 1 < spec.depth:
            for side in (-1, 1):
                turn = side * math.radians(rng.uniform(20, 40))
                grow(x1, y1, angle + turn, length * 0.75, max(1, int(round(width * spec.taper))), level + 1)

    grow(w // 2, h - 1 - spec.margin - spec.width, math.pi / 2, spec.length, spec.width, 0)

    mask = np.zeros((h, w), bool)
    half = np.zeros((h, w))
    for x0, y0, x1, y1, width in segments:
        a, b = -(width // 2), (width - 1) // 2
        for px, py in bresenham(x0, y0, x1, y1):
            ys = slice(py + a, py + b + 1)
            xs = slice(px + a, px + b + 1)
            if py + a < 0 or px + a < 0 or py + b >= h or px + b >= w:
                raise MaskError("phantom exceeds canvas")
            mask[ys, xs] = True
            half[ys, xs] = np.maximum(half[ys, xs], width / 2)
    return mask, half


def generate(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    """Rasterize ``spec``; returns (mask, nominal half-width per foreground pixel)."""
    if spec.kind == "band":
        mask, half = _band(spec)
    elif spec.kind in ("disk", "ring"):
        mask, half = _radial(spec)
    else:
        mask, half = _tree(spec)
    ys, xs = np.nonzero(mask)
    w, h = spec.canvas
    m = spec.margin
    if len(ys) == 0 or ys.min() < m or xs.min() < m or ys.max() > h - 1 - m or xs.max() > w - 1 - m:
        raise MaskError("phantom exceeds canvas")
    return mask, half


def expected_peak(spec: PhantomSpec) -> float:
    """Analytic maximum of the distance transform (exact for bands, within 1 for disks)."""
    if spec.kind == "band":
        return float(math.ceil(spec.width / 2))
    if spec.kind == "disk":
        return float(spec.radius)
    if spec.kind == "ring":
        return float(math.ceil(spec.width / 2))
    raise MaskError("no analytic peak for tree phantoms")


BAND_WIDTHS = (1, 2, 5, 9, 15)


def suite_specs() -> dict[str, PhantomSpec]:
    specs = {}
    for w in BAND_WIDTHS:
        m = max(w, 4)
        height = 2 * m + 7 * band_pitch(w) + w
        height += -height % 4
        specs[f"band_w{w:02d}"] = PhantomSpec("band", Size2D(128, height), width=w, count=8)
    specs["disk_r10"] = PhantomSpec("disk", Size2D(48, 48), radius=10)
    specs["ring_r20_w6"] = PhantomSpec("ring", Size2D(64, 64), width=6, radius=20)
    specs["tree_s42"] = PhantomSpec(
        "branching-tree", Size2D(256, 256), width=9, length=60, depth=4, taper=0.6, seed=42
    )
    return specs


def standard_suite(thresholds: StratumThresholds = StratumThresholds()):
    """Fixed phantom set: list of (name, mask, stratum labels)."""
    out = []
    for name, spec in suite_specs().items():
        mask, _ = generate(spec)
        out.append((name, mask, stratify_mask(mask, thresholds)))
    return out
