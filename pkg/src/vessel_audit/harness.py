"""
Manifest-driven evaluation sweeps, decimation audits and result-table statistics.

Predictions are found at ``<pred_root>/<condition>/<image_id>.png`` unless
the manifest entry carries a ``pred`` path, which may contain a
``{condition}`` placeholder.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .masks import DatasetManifest, MaskError, Size2D, load_manifest, load_mask, load_probability
from .metrics import METRIC_NAMES, EvalResult, SummaryRow, aggregate, evaluate_image
from .report import ReportTable, fmt
from .resample import ConditionSpec, decimation_audit, load_conditions, preset_conditions
from .stats import T_APPROX, StatsError, StatTestResult, spearman, wilcoxon_signed_rank
from .stratify import STRATUM_NAMES, StratumThresholds, stratify_mask

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    manifests: list[Path]
    conditions: str = "paper-table2"
    pred_root: Path | None = None
    threshold: float = 0.5
    strata: StratumThresholds = field(default_factory=StratumThresholds)
    out: Path = Path("out")
    formats: tuple[str, ...] = ("csv",)
    plotdata: bool = False
    workers: int = 1
    use_fov: bool = False
    upsample_probabilities: bool = False

    def validate(self) -> "RunConfig":
        if not self.manifests:
            raise MaskError("no manifest given")
        for m in self.manifests:
            if not Path(m).is_file():
                raise MaskError(f"no such manifest: {m}")
        if self.pred_root is not None and not Path(self.pred_root).is_dir():
            raise MaskError(f"no such prediction directory: {self.pred_root}")
        if not 0.0 < self.threshold < 1.0:
            raise MaskError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.workers < 1:
            raise MaskError("workers must be >= 1")
        return self

    def conditions_for(self, dataset: str) -> list[ConditionSpec]:
        if Path(self.conditions).is_file():
            return load_conditions(self.conditions)
        return list(preset_conditions(self.conditions, dataset))

    def digest(self) -> str:
        """Hash of everything that can change results (not output location or parallelism)."""
        doc = {
            "manifests": [
                [str(m), hashlib.sha256(Path(m).read_bytes()).hexdigest()] for m in self.manifests
            ],
            "conditions": self.conditions,
            "conditions_file": (
                hashlib.sha256(Path(self.conditions).read_bytes()).hexdigest()
                if Path(self.conditions).is_file()
                else None
            ),
            "pred_root": str(self.pred_root) if self.pred_root else None,
            "threshold": self.threshold,
            "strata": [self.strata.thin_below, self.strata.thick_above],
            "use_fov": self.use_fov,
            "upsample_probabilities": self.upsample_probabilities,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible JSON output
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def prediction_path(config: RunConfig, entry, condition: str) -> Path:
    if entry.prediction_path:
        return Path(entry.prediction_path.replace("{condition}", condition))
    if config.pred_root is None:
        raise MaskError(f"{entry.image_id}: no prediction path and no prediction root")
    return Path(config.pred_root) / condition / f"{entry.image_id}.png"


@dataclass
class _Prepared:
    gt: np.ndarray
    labels: np.ndarray
    fov: np.ndarray | None


def _prepare(manifest: DatasetManifest, entry, config: RunConfig) -> _Prepared:
    gt = load_mask(entry.gt_mask_path)
    fov = load_mask(entry.fov_mask_path) if config.use_fov and entry.fov_mask_path else None
    return _Prepared(gt, stratify_mask(gt, config.strata), fov)


def _evaluate_one(config, manifest, entry, prep, condition, size) -> EvalResult | None:
    path = prediction_path(config, entry, condition)
    if not path.is_file():
        log.warning("%s/%s/%s: missing prediction %s", manifest.dataset_name, condition, entry.image_id, path)
        return None
    pred = load_probability(path)
    if Size2D.of(pred) != size:
        raise MaskError(
            f"{entry.image_id}: prediction {path} is {Size2D.of(pred)}, condition {condition} expects {size}"
        )
    return evaluate_image(
        pred,
        prep.gt,
        manifest.native_size,
        config.threshold,
        prep.fov,
        image_id=entry.image_id,
        thresholds=config.strata,
        labels=prep.labels,
        upsample_probabilities=config.upsample_probabilities,
    )


def run_evaluate(config: RunConfig) -> ReportTable:
    """Evaluate every manifest under every condition; one summary row per pair."""
    config.validate()
    rows = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for mpath in config.manifests:
            manifest = load_manifest(mpath)
            entries = manifest.entries
            prepared = list(pool.map(lambda e: _prepare(manifest, e, config), entries))
            for cond in config.conditions_for(manifest.dataset_name):
                size = cond.processed_size(manifest.native_size)
                results = list(
                    pool.map(
                        lambda ep: _evaluate_one(config, manifest, ep[0], ep[1], cond.name, size),
                        zip(entries, prepared),
                    )
                )
                done = [r for r in results if r is not None]
                incomplete = len(done) < len(results)
                if not done:
                    empty = {k: None for k in METRIC_NAMES}
                    row = SummaryRow(manifest.dataset_name, cond.name, size.width, dict(empty), dict(empty), True)
                else:
                    row = aggregate(
                        done,
                        manifest.fold_of(),
                        dataset=manifest.dataset_name,
                        condition=cond.name,
                        processed_width=size.width,
                        incomplete=incomplete,
                    )
                rows.append(row)
    rows.sort(key=lambda r: (r.dataset, r.condition))
    provenance = {"config_hash": config.digest(), "tool_version": __version__, "timestamp": _timestamp()}
    return ReportTable(rows, provenance)


DECIMATION_HEADER = (
    ["dataset", "condition", "width", "height"]
    + [f"{s}_retention" for s in STRATUM_NAMES]
    + [f"{s}_lost" for s in STRATUM_NAMES]
    + ["images"]
)


def run_decimation_audit(config: RunConfig) -> list[dict]:
    """Round-trip every ground truth through each condition; retention averaged over images."""
    config.validate()
    table = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for mpath in config.manifests:
            manifest = load_manifest(mpath)
            conditions = config.conditions_for(manifest.dataset_name)

            def audit(entry):
                gt = load_mask(entry.gt_mask_path)
                return decimation_audit(gt, stratify_mask(gt, config.strata), conditions)

            per_image = list(pool.map(audit, manifest.entries))
            for i, cond in enumerate(conditions):
                rows = [img[i] for img in per_image]
                rec = {
                    "dataset": manifest.dataset_name,
                    "condition": cond.name,
                    "width": rows[0].processed_size.width,
                    "height": rows[0].processed_size.height,
                    "images": len(rows),
                }
                for s in STRATUM_NAMES:
                    vals = sorted(r.retention[s] for r in rows if r.retention[s] is not None)
                    rec[f"{s}_retention"] = sum(vals) / len(vals) if vals else None
                    rec[f"{s}_lost"] = sum(r.pixels_lost[s] for r in rows)
                table.append(rec)
    table.sort(key=lambda r: (r["dataset"], r["condition"]))
    return table


def write_decimation_csv(table: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DECIMATION_HEADER)
        for rec in table:
            w.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in (rec[k] for k in DECIMATION_HEADER)])
    return path


def read_columns(results_csv: str | Path, column_a: str, column_b: str, dataset: str | None = None):
    """Two numeric columns from a CSV, optionally restricted to one dataset's rows."""
    with open(results_csv, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in (column_a, column_b):
            if col not in (reader.fieldnames or []):
                raise StatsError(f"{results_csv}: no column {col!r}")
        recs = [r for r in reader if dataset is None or r.get("dataset") == dataset]
    if not recs:
        raise StatsError(f"{results_csv}: no rows" + (f" for dataset {dataset!r}" if dataset else ""))
    out = []
    for col in (column_a, column_b):
        try:
            out.append([float(r[col]) for r in recs])
        except (TypeError, ValueError) as exc:
            raise StatsError(f"{results_csv}: non-numeric cell in column {col!r}") from exc
    return out


def run_stats(
    results_csv, column_a: str, column_b: str, test: str, dataset: str | None = None, method: str = T_APPROX
) -> StatTestResult:
    a, b = read_columns(results_csv, column_a, column_b, dataset)
    if len(a) != len(b):
        raise StatsError("column length mismatch")
    if test == "wilcoxon":
        return wilcoxon_signed_rank(a, b)
    if test == "spearman":
        return spearman(a, b, method=method)
    raise StatsError(f"unknown test {test!r}")


PHANTOM_DATASET = "PHANTOM"
PHANTOM_FOLDS = 5


def write_phantom_suite(out_dir: str | Path, predictions: bool = False, conditions=None) -> Path:
    """Write the phantom suite as an evaluation-ready dataset.

    Members are padded with background onto one shared canvas so that a
    single manifest can hold them. ``expectations.json`` records the
    per-member stratum counts and peak distances. With ``predictions``,
    each member's ground truth is decimated to every condition's size
    and stored as ``preds/<condition>/<id>.png``. Returns the manifest path.
    """
    from .edt import euclidean_distance_transform
    from .masks import save_mask, write_manifest
    from .phantom import SUITE_VERSION, expected_peak, generate, suite_specs
    from .resample import CANONICAL_SCALES, resize_nearest
    from .stratify import stratum_counts

    out_dir = Path(out_dir)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)
    specs = suite_specs()
    masks = {name: generate(spec)[0] for name, spec in specs.items()}
    height = max(m.shape[0] for m in masks.values())
    width = max(m.shape[1] for m in masks.values())
    native = Size2D(width, height)
    conditions = list(conditions or CANONICAL_SCALES)

    entries, expectations = [], []
    for i, (name, mask) in enumerate(masks.items()):
        canvas = np.zeros((height, width), bool)
        y0 = (height - mask.shape[0]) // 2
        x0 = (width - mask.shape[1]) // 2
        canvas[y0 : y0 + mask.shape[0], x0 : x0 + mask.shape[1]] = mask
        save_mask(canvas, out_dir / "gt" / f"{name}.png")
        spec = specs[name]
        sq = euclidean_distance_transform(mask).squared
        expectations.append(
            {
                "id": name,
                "kind": spec.kind,
                "width": spec.width,
                "radius": spec.radius,
                "canvas": [spec.canvas.width, spec.canvas.height],
                "peak_squared_distance": int(sq.max()),
                "expected_peak": expected_peak(spec) if spec.kind != "branching-tree" else None,
                "strata": stratum_counts(stratify_mask(canvas)),
            }
        )
        entries.append({"id": name, "gt": f"gt/{name}.png", "fold": i % PHANTOM_FOLDS})
        if predictions:
            for cond in conditions:
                size = cond.processed_size(native)
                target = out_dir / "preds" / cond.name
                target.mkdir(parents=True, exist_ok=True)
                save_mask(resize_nearest(canvas, size), target / f"{name}.png")

    doc = {
        "dataset": PHANTOM_DATASET,
        "native_size": {"width": width, "height": height},
        "entries": entries,
    }
    manifest_path = out_dir / "manifest.json"
    write_manifest(doc, manifest_path)
    (out_dir / "expectations.json").write_text(
        json.dumps({"suite_version": SUITE_VERSION, "members": expectations}, indent=2) + "\n",
        encoding="utf-8",
    )
    if predictions:
        (out_dir / "conditions.json").write_text(
            json.dumps([c.to_dict() for c in conditions], indent=2) + "\n", encoding="utf-8"
        )
    return manifest_path
