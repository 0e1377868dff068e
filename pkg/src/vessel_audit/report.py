"""Report tables: CSV/JSON serialization and figure series."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .masks import MaskError
from .metrics import SummaryRow

CSV_HEADER = (
    "dataset,condition,width,dice_mean,dice_std,sens_mean,sens_std,spec_mean,spec_std,"
    "thin_mean,thin_std,medium_mean,medium_std,thick_mean,thick_std,incomplete"
).split(",")

# CSV column prefix -> metric key
_COLUMNS = {
    "dice": "dice",
    "sens": "sensitivity",
    "spec": "specificity",
    "thin": "thin",
    "medium": "medium",
    "thick": "thick",
}


def fmt(value: float | None, places: int = 4) -> str:
    return "" if value is None else f"{value:.{places}f}"


@dataclass
class ReportTable:
    rows: list[SummaryRow]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        keys = [(r.dataset, r.condition) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise MaskError("duplicate (dataset, condition) rows")

    @property
    def incomplete(self) -> bool:
        return any(r.incomplete for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            line = [r.dataset, r.condition, r.processed_width]
            for key in _COLUMNS.values():
                line += [fmt(r.mean.get(key)), fmt(r.std.get(key))]
            line.append(int(r.incomplete))
            writer.writerow(line)
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "provenance": self.provenance,
            "rows": [
                {
                    "dataset": r.dataset,
                    "condition": r.condition,
                    "width": r.processed_width,
                    "mean": r.mean,
                    "std": r.std,
                    "incomplete": r.incomplete,
                }
                for r in self.rows
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path, formats=("csv",)) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            written.append(out_dir / "report.csv")
            written[-1].write_text(self.to_csv(), encoding="utf-8")
        if "json" in formats:
            written.append(out_dir / "report.json")
            written[-1].write_text(self.to_json(), encoding="utf-8")
        return written


def _cell(text: str) -> float | None:
    text = text.strip()
    return float(text) if text else None


def read_report_csv(path: str | Path) -> ReportTable:
    """Parse a report CSV; missing std/stratum cells become ``None``."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            try:
                row = SummaryRow(rec["dataset"], rec["condition"], int(rec["width"]))
                for col, key in _COLUMNS.items():
                    row.mean[key] = _cell(rec.get(f"{col}_mean", ""))
                    row.std[key] = _cell(rec.get(f"{col}_std", ""))
                row.incomplete = rec.get("incomplete", "0").strip() in ("1", "true", "True")
            except (KeyError, ValueError) as exc:
                raise MaskError(f"{path}: bad report row {rec}: {exc}") from exc
            rows.append(row)
    return ReportTable(rows)


def best_worst_thin(report: ReportTable) -> list[tuple[str, float, float]]:
    """Per dataset, highest and lowest thin-stratum mean over its conditions."""
    by_dataset: dict[str, list[float]] = {}
    for r in report.rows:
        if r.mean.get("thin") is not None:
            by_dataset.setdefault(r.dataset, []).append(r.mean["thin"])
    return [(ds, max(v), min(v)) for ds, v in by_dataset.items()]


def emit_plotdata(report: ReportTable, out_dir: str | Path) -> list[Path]:
    """Write the three figure series as CSV files; returns their paths."""
    if not report.rows:
        raise MaskError("empty report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def write(name, header, lines):
        path = out_dir / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(lines)
        return path

    fig1 = write(
        "fig1_dice_vs_thin.csv",
        ["dataset", "condition", "dice", "thin_sens"],
        [[r.dataset, r.condition, fmt(r.mean.get("dice")), fmt(r.mean.get("thin"))] for r in report.rows],
    )
    fig2 = write(
        "fig2_thin_vs_width.csv",
        ["dataset", "condition", "processed_width", "thin_sens"],
        [[r.dataset, r.condition, r.processed_width, fmt(r.mean.get("thin"))] for r in report.rows],
    )
    fig4 = write(
        "fig4_best_worst_thin.csv",
        ["dataset", "best_thin", "worst_thin", "gap"],
        [[ds, fmt(b), fmt(w), fmt(b - w)] for ds, b, w in best_worst_thin(report)],
    )
    return [fig1, fig2, fig4]
