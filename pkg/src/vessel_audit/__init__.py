"""Width-stratified evaluation and resize-loss auditing for binary vessel segmentations."""

__version__ = "0.1.0"

from .edt import DistanceMap, euclidean_distance_transform
from .masks import (
    DatasetManifest,
    MaskError,
    Size2D,
    binarize,
    load_manifest,
    load_mask,
    load_probability,
    save_mask,
)
from .metrics import EvalResult, SummaryRow, aggregate, dice, evaluate_image, sensitivity, specificity, stratified_sensitivity
from .resample import ConditionSpec, condition_sizes, decimation_audit, resize_bilinear, resize_nearest
from .stats import StatTestResult, spearman, wilcoxon_signed_rank
from .stratify import Stratum, StratumThresholds, stratify, stratum_counts

__all__ = [
    "ConditionSpec",
    "DatasetManifest",
    "DistanceMap",
    "EvalResult",
    "MaskError",
    "Size2D",
    "StatTestResult",
    "Stratum",
    "StratumThresholds",
    "SummaryRow",
    "aggregate",
    "binarize",
    "condition_sizes",
    "decimation_audit",
    "dice",
    "euclidean_distance_transform",
    "evaluate_image",
    "load_manifest",
    "load_mask",
    "load_probability",
    "resize_bilinear",
    "resize_nearest",
    "save_mask",
    "sensitivity",
    "spearman",
    "specificity",
    "stratified_sensitivity",
    "stratify",
    "stratum_counts",
    "wilcoxon_signed_rank",
]
