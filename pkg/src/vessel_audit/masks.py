"""
Raster types, image IO, thresholding and dataset manifests.

Binary masks are 2D ``bool`` numpy arrays of shape ``(height, width)``;
probability maps are 2D ``float64`` arrays with values in ``[0, 1]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image


class MaskError(ValueError):
    """Raised for invalid rasters or manifests."""


class Size2D(NamedTuple):
    width: int
    height: int

    @classmethod
    def of(cls, array: np.ndarray) -> "Size2D":
        return cls(int(array.shape[1]), int(array.shape[0]))

    def validate(self) -> "Size2D":
        if self.width < 1 or self.height < 1:
            raise MaskError(f"size must be positive, got {self.width}x{self.height}")
        return self

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


def as_mask(data) -> np.ndarray:
    """Return ``data`` as a 2D bool array, rejecting anything other than 0/1 values."""
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.size == 0:
        raise MaskError(f"mask must be a non-empty 2D array, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr
    if not np.isin(arr, (0, 1)).all():
        raise MaskError("mask values must be exactly 0 or 1")
    return arr.astype(bool)


def as_probability(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise MaskError(f"probability map must be a non-empty 2D array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise MaskError("probability map contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise MaskError("probability values must lie in [0, 1]")
    return arr


def check_same_size(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays if a is not None}
    if len(shapes) > 1:
        raise MaskError(f"size mismatch: {sorted(shapes)}")


def _read_raster(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a grayscale or RGB raster, returning (2D integer array, maxval)."""
    path = Path(path)
    if not path.is_file():
        raise MaskError(f"no such file: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "P":
                img = img.convert("RGB")
                mode = "RGB"
            if mode in ("1", "L"):
                return np.asarray(img.convert("L"), dtype=np.int64), 255
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(img, dtype=np.int64)
                maxval = 65535 if mode.startswith("I;16") or arr.max() > 255 else 255
                return arr, maxval
            if mode in ("RGB", "RGBA", "LA"):
                arr = np.asarray(img, dtype=np.int64)
                channels = arr[..., :3] if mode != "LA" else arr[..., :1]
                if not (channels == channels[..., :1]).all():
                    raise MaskError(f"{path}: colour raster is not grayscale-valued")
                return channels[..., 0], 255
    except MaskError:
        raise
    except Exception as exc:  # PIL raises a zoo of types for bad files
        raise MaskError(f"{path}: unreadable raster ({exc})") from exc
    raise MaskError(f"{path}: unsupported raster mode {mode!r}")


def load_mask(path: str | Path) -> np.ndarray:
    """Load an 8-bit grayscale/RGB raster as a binary mask (intensity > 127 is foreground)."""
    arr, maxval = _read_raster(path)
    if maxval != 255:
        raise MaskError(f"{path}: masks must be 8-bit")
    return arr > 127


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    mask = as_mask(mask)
    Image.fromarray(mask.astype(np.uint8) * 255).save(path)


def load_probability(path: str | Path) -> np.ndarray:
    """Load an 8- or 16-bit grayscale raster mapped linearly to [0, 1] by value/maxval."""
    arr, maxval = _read_raster(path)
    return arr.astype(np.float64) / maxval


def save_probability(prob: np.ndarray, path: str | Path, bits: int = 16) -> None:
    prob = as_probability(prob)
    if bits == 8:
        Image.fromarray(np.rint(prob * 255).astype(np.uint8)).save(path)
    elif bits == 16:
        Image.fromarray(np.rint(prob * 65535).astype(np.uint16)).save(path)
    else:
        raise ValueError("bits must be 8 or 16")


def binarize(prob: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Foreground where ``prob >= threshold`` (inclusive)."""
    if not 0.0 < threshold < 1.0:
        raise MaskError(f"threshold must lie in (0, 1), got {threshold}")
    return as_probability(prob) >= threshold


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    gt_mask_path: Path
    fold_id: int
    prediction_path: str | None = None
    fov_mask_path: Path | None = None


@dataclass(frozen=True)
class DatasetManifest:
    dataset_name: str
    native_size: Size2D
    entries: tuple[ManifestEntry, ...]
    source: Path | None = None

    @property
    def n_folds(self) -> int:
        return max(e.fold_id for e in self.entries) + 1

    def fold_of(self) -> dict[str, int]:
        return {e.image_id: e.fold_id for e in self.entries}

    def check_raster_sizes(self) -> None:
        """Verify every ground-truth (and FOV) file has the declared native size."""
        for e in self.entries:
            for path in (e.gt_mask_path, e.fov_mask_path):
                if path is None:
                    continue
                size = Size2D.of(load_mask(path))
                if size != self.native_size:
                    raise MaskError(
                        f"{self.dataset_name}/{e.image_id}: {path} is {size}, "
                        f"manifest declares {self.native_size}"
                    )


def parse_manifest(doc: dict, base_dir: Path | None = None) -> DatasetManifest:
    """Validate a manifest document already parsed from JSON."""
    base_dir = base_dir or Path(".")
    try:
        name = str(doc["dataset"])
        ns = doc["native_size"]
        native = Size2D(int(ns["width"]), int(ns["height"])).validate()
        raw_entries = doc["entries"]
    except (KeyError, TypeError) as exc:
        raise MaskError(f"manifest missing required field: {exc}") from exc
    if not raw_entries:
        raise MaskError("empty manifest")

    def resolve(p):
        if p is None:
            return None
        if not isinstance(p, str) or not p or "\0" in p:
            raise MaskError(f"invalid path {p!r}")
        path = Path(p)
        return path if path.is_absolute() else base_dir / path

    entries = []
    seen = set()
    for raw in raw_entries:
        try:
            image_id = str(raw["id"])
            gt = resolve(raw["gt"])
            fold = raw["fold"]
        except (KeyError, TypeError) as exc:
            raise MaskError(f"manifest entry missing required field: {exc}") from exc
        if not isinstance(fold, int) or isinstance(fold, bool) or fold < 0:
            raise MaskError(f"entry {image_id}: fold must be a non-negative integer")
        if image_id in seen:
            raise MaskError(f"duplicate image_id {image_id!r}")
        seen.add(image_id)
        pred = raw.get("pred")
        if pred is not None:
            # kept as a string: it may carry a {condition} placeholder
            pred = str(resolve(pred))
        entries.append(ManifestEntry(image_id, gt, fold, pred, resolve(raw.get("fov"))))

    folds = {e.fold_id for e in entries}
    if folds != set(range(len(folds))):
        raise MaskError(f"non-contiguous folds: {sorted(folds)}")
    return DatasetManifest(name, native, tuple(entries))


def load_manifest(path: str | Path, check_files: bool = True) -> DatasetManifest:
    """Read and validate a JSON manifest; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise MaskError(f"no such manifest: {path}") from exc
    except json.JSONDecodeError as exc:
        raise MaskError(f"{path}: malformed JSON ({exc})") from exc
    manifest = parse_manifest(doc, path.parent)
    manifest = DatasetManifest(manifest.dataset_name, manifest.native_size, manifest.entries, path)
    if check_files:
        manifest.check_raster_sizes()
    return manifest


def write_manifest(manifest_doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_doc, indent=2) + "\n", encoding="utf-8")
