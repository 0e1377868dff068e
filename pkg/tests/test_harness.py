import json

import numpy as np
import pytest

from vessel_audit.cli import EXIT_INVALID, EXIT_OK, EXIT_PARTIAL, main
from vessel_audit.harness import RunConfig, run_decimation_audit, run_evaluate, run_stats, write_phantom_suite
from vessel_audit.masks import MaskError, save_mask, save_probability
from vessel_audit.stratify import StratumThresholds


def _dataset(tmp_path, n=4, folds=2, name="TOY"):
    """Ground truth equals prediction at every condition of a 1.0/0.5 sweep."""
    rng = np.random.default_rng(3)
    entries = []
    (tmp_path / "gt").mkdir()
    (tmp_path / "preds" / "R1").mkdir(parents=True)
    for i in range(n):
        gt = np.zeros((16, 24), bool)
        gt[4 + i : 9 + i, 2:22] = True
        gt[12, rng.integers(0, 24)] = True
        save_mask(gt, tmp_path / "gt" / f"{i}.png")
        save_mask(gt, tmp_path / "preds" / "R1" / f"{i}.png")
        entries.append({"id": str(i), "gt": f"gt/{i}.png", "fold": i % folds})
    doc = {"dataset": name, "native_size": {"width": 24, "height": 16}, "entries": entries}
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps(doc))
    conds = tmp_path / "conds.json"
    conds.write_text(json.dumps([{"name": "R1", "scale": 1.0}]))
    return manifest, conds


def test_evaluate_perfect_predictions(tmp_path):
    manifest, conds = _dataset(tmp_path)
    cfg = RunConfig([manifest], str(conds), tmp_path / "preds")
    report = run_evaluate(cfg)
    (row,) = report.rows
    assert row.mean["dice"] == row.mean["sensitivity"] == row.mean["specificity"] == 1.0
    assert row.std["dice"] == 0.0 and not row.incomplete
    assert report.provenance["config_hash"] == cfg.digest()


def test_single_image_summary_equals_image(tmp_path):
    manifest, conds = _dataset(tmp_path, n=1, folds=1)
    pred = np.zeros((16, 24))
    pred[5:8, 3:20] = 0.7
    save_probability(pred, tmp_path / "preds" / "R1" / "0.png")
    (row,) = run_evaluate(RunConfig([manifest], str(conds), tmp_path / "preds")).rows
    from vessel_audit import evaluate_image, load_mask, load_probability

    direct = evaluate_image(load_probability(tmp_path / "preds" / "R1" / "0.png"), load_mask(tmp_path / "gt" / "0.png"))
    assert row.mean["dice"] == direct.dice
    assert row.mean["thin"] == direct.stratified["thin"]


def test_missing_prediction_marks_incomplete(tmp_path):
    manifest, conds = _dataset(tmp_path)
    (tmp_path / "preds" / "R1" / "1.png").unlink()
    (row,) = run_evaluate(RunConfig([manifest], str(conds), tmp_path / "preds")).rows
    assert row.incomplete
    assert main(["evaluate", "--manifest", str(manifest), "--conditions", str(conds),
                 "--pred-root", str(tmp_path / "preds"), "--out", str(tmp_path / "o")]) == EXIT_PARTIAL


def test_prediction_size_mismatch(tmp_path):
    manifest, conds = _dataset(tmp_path)
    save_mask(np.zeros((5, 5), bool), tmp_path / "preds" / "R1" / "0.png")
    with pytest.raises(MaskError, match="expects"):
        run_evaluate(RunConfig([manifest], str(conds), tmp_path / "preds"))


def test_pred_template_in_manifest(tmp_path):
    manifest, conds = _dataset(tmp_path, n=1, folds=1)
    doc = json.loads(manifest.read_text())
    doc["entries"][0]["pred"] = "preds/{condition}/0.png"
    manifest.write_text(json.dumps(doc))
    (row,) = run_evaluate(RunConfig([manifest], str(conds))).rows
    assert row.mean["dice"] == 1.0


def test_config_hash_tracks_threshold(tmp_path):
    manifest, conds = _dataset(tmp_path)
    a = RunConfig([manifest], str(conds), tmp_path / "preds")
    b = RunConfig([manifest], str(conds), tmp_path / "preds", threshold=0.6)
    c = RunConfig([manifest], str(conds), tmp_path / "preds", out=tmp_path / "elsewhere", workers=4)
    assert a.digest() != b.digest()
    assert a.digest() == c.digest()


def test_validation_errors(tmp_path):
    with pytest.raises(MaskError):
        RunConfig([tmp_path / "nope.json"]).validate()
    manifest, _ = _dataset(tmp_path)
    with pytest.raises(MaskError):
        RunConfig([manifest], threshold=1.0).validate()
    assert main(["evaluate", "--manifest", str(tmp_path / "nope.json")]) == EXIT_INVALID


def test_decimation_audit_table(tmp_path):
    manifest, _ = _dataset(tmp_path)
    table = run_decimation_audit(RunConfig([manifest], "paper-table2"))
    assert [r["condition"] for r in table] == ["R1", "R2", "R3", "R4"]
    assert table[0]["thin_retention"] == 1.0 and table[0]["medium_retention"] == 1.0
    assert table[0]["thick_retention"] is None


def test_decimation_empty_manifest(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"dataset": "X", "native_size": {"width": 4, "height": 4}, "entries": []}))
    with pytest.raises(MaskError, match="empty manifest"):
        run_decimation_audit(RunConfig([path]))


def test_run_stats_fixture(results_csv):
    r = run_stats(results_csv, "dice_mean", "thin_mean", "spearman", dataset="HRF")
    assert round(r.statistic, 4) == -0.9
    assert abs(r.p_value - 0.037) <= 0.002
    assert run_stats(results_csv, "dice_mean", "dice_mean", "spearman").statistic == pytest.approx(1.0)


def test_run_stats_wilcoxon(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b\n1.5,1\n2.5,2\n3.5,3\n4.5,4\n5.5,5\n")
    assert run_stats(path, "a", "b", "wilcoxon").p_value == 0.0625


def test_run_stats_errors(tmp_path, results_csv):
    from vessel_audit.stats import StatsError

    with pytest.raises(StatsError, match="no column"):
        run_stats(results_csv, "dice_mean", "nope", "spearman")
    with pytest.raises(StatsError, match="non-numeric"):
        run_stats(results_csv, "dice_mean", "dataset", "spearman")
    with pytest.raises(StatsError, match="non-numeric"):
        run_stats(results_csv, "dice_mean", "thick_mean", "wilcoxon")


def test_cli_stats_output(capsys, results_csv):
    rc = main(["stats", "--results", str(results_csv), "--a", "dice_mean", "--b", "thin_mean",
               "--test", "spearman", "--dataset", "HRF"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "statistic\t-0.900000" in out and "method\tt-approximation" in out and "n\t5" in out


def test_cli_sizes(capsys):
    assert main(["sizes", "--dataset", "STARE"]) == EXIT_OK
    assert "STARE\tR2\t525 x 453" in capsys.readouterr().out
    assert main(["sizes", "--native", "100x50", "--conditions", "paper-table2"]) == EXIT_OK
    assert "custom\tR4\t25 x 12" in capsys.readouterr().out


def test_phantom_suite_evaluate(tmp_path):
    manifest = write_phantom_suite(tmp_path, predictions=True)
    expectations = json.loads((tmp_path / "expectations.json").read_text())
    assert len(expectations["members"]) == 8
    cfg = RunConfig([manifest], str(tmp_path / "conditions.json"), tmp_path / "preds",
                    strata=StratumThresholds(3, 7), workers=3)
    rows = {r.condition: r for r in run_evaluate(cfg).rows}
    assert rows["R1"].mean["thin"] == 1.0
    assert rows["R4"].mean["thin"] < rows["R4"].mean["thick"]
    # frozen from the first verified run
    assert round(rows["R4"].mean["thin"], 4) == 0.6730


def test_cli_evaluate_formats(tmp_path):
    manifest = write_phantom_suite(tmp_path / "s", predictions=True)
    rc = main(["evaluate", "--manifest", str(manifest), "--conditions", str(tmp_path / "s" / "conditions.json"),
               "--pred-root", str(tmp_path / "s" / "preds"), "--out", str(tmp_path / "o"),
               "--format", "csv,json", "--plotdata", "--workers", "2"])
    assert rc == EXIT_OK
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert set(doc["provenance"]) == {"config_hash", "tool_version", "timestamp"}
    assert len(doc["rows"]) == 4
    assert (tmp_path / "o" / "plotdata" / "fig4_best_worst_thin.csv").is_file()
    rc = main(["decimate", "--manifest", str(manifest), "--out", str(tmp_path / "o")])
    assert rc == EXIT_OK
    assert (tmp_path / "o" / "decimation.csv").read_text().startswith("dataset,condition,width,height")
