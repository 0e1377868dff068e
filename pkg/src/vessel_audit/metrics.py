"""
Overlap metrics, width-stratified sensitivity and fold aggregation.

Undefined ratios (zero denominators) are returned as ``None`` and are
left out of every mean they would otherwise enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .masks import MaskError, Size2D, as_mask, as_probability, binarize, check_same_size
from .resample import resize_bilinear, resize_nearest
from .stratify import STRATA, STRATUM_NAMES, StratumThresholds, stratify_mask, stratum_counts


def _pair(pred, gt):
    pred, gt = as_mask(pred), as_mask(gt)
    check_same_size(pred, gt)
    return pred, gt


def dice(pred: np.ndarray, gt: np.ndarray) -> float:
    pred, gt = _pair(pred, gt)
    denom = int(pred.sum()) + int(gt.sum())
    if denom == 0:
        return 1.0
    return 2 * int((pred & gt).sum()) / denom


def sensitivity(pred: np.ndarray, gt: np.ndarray) -> float | None:
    pred, gt = _pair(pred, gt)
    positives = int(gt.sum())
    if positives == 0:
        return None
    return int((pred & gt).sum()) / positives


def specificity(pred: np.ndarray, gt: np.ndarray, fov: np.ndarray | None = None) -> float | None:
    """TN / (TN + FP) over ground-truth background, inside ``fov`` when given."""
    pred, gt = _pair(pred, gt)
    negatives = ~gt
    if fov is not None:
        fov = as_mask(fov)
        check_same_size(gt, fov)
        negatives &= fov
    n = int(negatives.sum())
    if n == 0:
        return None
    return int((negatives & ~pred).sum()) / n


def stratified_sensitivity(pred: np.ndarray, gt: np.ndarray, labels: np.ndarray) -> dict[str, float | None]:
    """Recall restricted to each width stratum of the native-resolution ground truth."""
    pred, gt = _pair(pred, gt)
    labels = np.asarray(labels)
    check_same_size(gt, labels)
    if ((labels != 0) != gt).any():
        raise MaskError("stratum labels inconsistent with ground truth")
    hits = np.bincount(labels[pred & gt].ravel(), minlength=4)
    totals = np.bincount(labels.ravel(), minlength=4)
    return {
        name: (int(hits[s]) / int(totals[s]) if totals[s] else None)
        for name, s in zip(STRATUM_NAMES, STRATA)
    }


@dataclass
class EvalResult:
    image_id: str
    dice: float | None
    sensitivity: float | None
    specificity: float | None
    stratified: dict[str, float | None]
    stratum_gt_counts: dict[str, int]

    def metric(self, name: str) -> float | None:
        if name in STRATUM_NAMES:
            return self.stratified[name]
        return getattr(self, name)


def evaluate_image(
    pred_raw: np.ndarray,
    gt_native: np.ndarray,
    native: Size2D | None = None,
    threshold: float = 0.5,
    fov: np.ndarray | None = None,
    *,
    image_id: str = "",
    thresholds: StratumThresholds = StratumThresholds(),
    labels: np.ndarray | None = None,
    upsample_probabilities: bool = False,
) -> EvalResult:
    """Score one prediction against native-resolution ground truth.

    ``pred_raw`` is a binary mask or a probability map at any processed size.
    Probability maps are thresholded first and the binary result is
    upsampled to native size with nearest neighbour; with
    ``upsample_probabilities`` the map is instead resized bilinearly and
    thresholded at native size.
    """
    try:
        gt_native = as_mask(gt_native)
        native = Size2D.of(gt_native) if native is None else Size2D(*native)
        if Size2D.of(gt_native) != native:
            raise MaskError(f"ground truth is {Size2D.of(gt_native)}, expected native {native}")
        raw = np.asarray(pred_raw)
        if raw.dtype == bool:
            pred = resize_nearest(raw, native)
        elif upsample_probabilities:
            pred = binarize(resize_bilinear(as_probability(raw), native), threshold)
        else:
            pred = resize_nearest(binarize(raw, threshold), native)
        if labels is None:
            labels = stratify_mask(gt_native, thresholds)
        return EvalResult(
            image_id=image_id,
            dice=dice(pred, gt_native),
            sensitivity=sensitivity(pred, gt_native),
            specificity=specificity(pred, gt_native, fov),
            stratified=stratified_sensitivity(pred, gt_native, labels),
            stratum_gt_counts=stratum_counts(labels),
        )
    except MaskError as exc:
        if image_id:
            raise MaskError(f"{image_id}: {exc}") from exc
        raise


METRIC_NAMES = ("dice", "sensitivity", "specificity") + STRATUM_NAMES


@dataclass
class SummaryRow:
    dataset: str
    condition: str
    processed_width: int
    mean: dict[str, float | None] = field(default_factory=dict)
    std: dict[str, float | None] = field(default_factory=dict)
    incomplete: bool = False


def _mean(values):
    return math.fsum(values) / len(values)


def aggregate(
    results,
    fold_of: dict[str, int],
    *,
    dataset: str = "",
    condition: str = "",
    processed_width: int = 0,
    incomplete: bool = False,
) -> SummaryRow:
    """Mean over images within each fold, then mean and sample std across folds.

    The result does not depend on the order of ``results``.
    """
    by_fold: dict[int, list[EvalResult]] = {}
    for r in results:
        if r.image_id not in fold_of:
            raise MaskError(f"image {r.image_id!r} has no fold assignment")
        by_fold.setdefault(fold_of[r.image_id], []).append(r)
    for fold in sorted(set(fold_of.values())):
        if fold not in by_fold:
            if not incomplete:
                raise MaskError(f"empty fold {fold}")
    if not by_fold:
        raise MaskError("nothing to aggregate")

    row = SummaryRow(dataset, condition, processed_width, incomplete=incomplete)
    for name in METRIC_NAMES:
        fold_means = []
        for fold in sorted(by_fold):
            # sort within the fold so the float sum is order-independent
            vals = sorted(v for r in by_fold[fold] if (v := r.metric(name)) is not None)
            if vals:
                fold_means.append(_mean(vals))
        if not fold_means:
            row.mean[name] = row.std[name] = None
            continue
        m = _mean(fold_means)
        row.mean[name] = m
        if len(fold_means) > 1:
            row.std[name] = math.sqrt(math.fsum((v - m) ** 2 for v in fold_means) / (len(fold_means) - 1))
        else:
            row.std[name] = 0.0
    return row
