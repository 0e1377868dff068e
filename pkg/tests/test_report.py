import csv

import pytest

from vessel_audit.masks import MaskError
from vessel_audit.metrics import SummaryRow
from vessel_audit.report import CSV_HEADER, ReportTable, best_worst_thin, emit_plotdata, read_report_csv


def test_fixture_round_trip(tmp_path, results_csv):
    report = read_report_csv(results_csv)
    assert len(report.rows) == 25
    assert report.rows[0].mean["dice"] == 0.7639 and report.rows[0].std["dice"] is None
    again = tmp_path / "again.csv"
    again.write_text(report.to_csv())
    assert read_report_csv(again).rows == report.rows


def test_header_matches_interface():
    assert ",".join(CSV_HEADER) == (
        "dataset,condition,width,dice_mean,dice_std,sens_mean,sens_std,spec_mean,spec_std,"
        "thin_mean,thin_std,medium_mean,medium_std,thick_mean,thick_std,incomplete"
    )


def test_duplicate_rows_rejected():
    with pytest.raises(MaskError):
        ReportTable([SummaryRow("A", "R1", 5), SummaryRow("A", "R1", 5)])


def test_plotdata_series(tmp_path, results_csv):
    report = read_report_csv(results_csv)
    fig1, fig2, fig4 = emit_plotdata(report, tmp_path)
    with open(fig1) as fh:
        assert len(list(csv.DictReader(fh))) == 25
    with open(fig2) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[15] == {"dataset": "HRF", "condition": "R1", "processed_width": "3504", "thin_sens": "0.5847"}
    with open(fig4) as fh:
        bars = {r["dataset"]: r for r in csv.DictReader(fh)}
    thin = {}
    for r in report.rows:
        thin.setdefault(r.dataset, []).append(r.mean["thin"])
    for ds, values in thin.items():
        assert float(bars[ds]["best_thin"]) == max(values)
        assert float(bars[ds]["worst_thin"]) == min(values)
    assert bars["DRIVE"]["gap"] == "0.1584"


def test_plotdata_empty_report(tmp_path):
    with pytest.raises(MaskError):
        emit_plotdata(ReportTable([]), tmp_path)


def test_best_worst_skips_missing():
    row = SummaryRow("A", "R1", 5, {"thin": None}, {})
    assert best_worst_thin(ReportTable([row])) == []
