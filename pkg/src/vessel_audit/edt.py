"""
Exact 2D Euclidean distance transform.

Every foreground pixel gets the distance between its centre and the
centre of the nearest in-image background pixel. The canonical result is
the integer squared distance; pixels outside the raster are never used as
references.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .masks import MaskError, as_mask

_INF = np.iinfo(np.int64).max // 4


@numba.njit(cache=True, nogil=True)
def _column_pass(mask, out):
    # squared vertical distance to the nearest background pixel in the same column
    h, w = mask.shape
    for x in range(w):
        last = -1
        for y in range(h):
            if not mask[y, x]:
                last = y
                out[y, x] = 0
            elif last >= 0:
                out[y, x] = (y - last) * (y - last)
            else:
                out[y, x] = _INF
        last = -1
        for y in range(h - 1, -1, -1):
            if not mask[y, x]:
                last = y
            elif last >= 0:
                d = (last - y) * (last - y)
                if d < out[y, x]:
                    out[y, x] = d


@numba.njit(cache=True, nogil=True)
def _row_pass(g, out):
    # lower envelope of parabolas (x - q)^2 + g[q]; breakpoints kept as exact fractions
    h, w = g.shape
    v = np.empty(w, np.int64)
    znum = np.empty(w + 1, np.int64)
    zden = np.empty(w + 1, np.int64)
    for y in range(h):
        f = g[y]
        k = -1
        for q in range(w):
            fq = f[q]
            if fq >= _INF:
                continue
            while k >= 0:
                p = v[k]
                num = (fq + q * q) - (f[p] + p * p)
                den = 2 * (q - p)
                # drop the top parabola while the new breakpoint lies left of its start
                if k > 0 and num * zden[k] <= znum[k] * den:
                    k -= 1
                else:
                    break
            if k < 0:
                k = 0
                v[0] = q
            else:
                p = v[k]
                k += 1
                v[k] = q
                znum[k] = (fq + q * q) - (f[p] + p * p)
                zden[k] = 2 * (q - p)
        j = 0
        for x in range(w):
            while j < k and znum[j + 1] < x * zden[j + 1]:
                j += 1
            p = v[j]
            out[y, x] = (x - p) * (x - p) + f[p]


@dataclass(frozen=True)
class DistanceMap:
    """Squared distances (int64) with the real-valued map derived on demand."""

    squared: np.ndarray

    @property
    def distance(self) -> np.ndarray:
        return np.sqrt(self.squared.astype(np.float64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.squared.shape

    def save_debug(self, path: str | Path) -> None:
        """Write ``<width> <height>`` text header followed by little-endian float32 distances."""
        h, w = self.squared.shape
        with open(path, "wb") as fh:
            fh.write(f"{w} {h}\n".encode("ascii"))
            fh.write(self.distance.astype("<f4").tobytes())

    @classmethod
    def load_debug(cls, path: str | Path) -> np.ndarray:
        with open(path, "rb") as fh:
            w, h = (int(t) for t in fh.readline().split())
            return np.frombuffer(fh.read(), dtype="<f4").reshape(h, w)


def euclidean_distance_transform(mask: np.ndarray) -> DistanceMap:
    """Exact EDT of a binary mask.

    Raises ``MaskError`` if the mask has no background pixel, since no
    distance reference exists inside the image.
    """
    mask = np.ascontiguousarray(as_mask(mask))
    if mask.all():
        raise MaskError("no background reference: mask has no background pixels")
    g = np.empty(mask.shape, np.int64)
    _column_pass(mask, g)
    out = np.empty(mask.shape, np.int64)
    _row_pass(g, out)
    return DistanceMap(out)
