"""Command-line entry point: ``vessel-audit {sizes,evaluate,decimate,stats,phantom}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    RunConfig,
    run_decimation_audit,
    run_evaluate,
    run_stats,
    write_decimation_csv,
    write_phantom_suite,
)
from .masks import MaskError, Size2D
from .report import emit_plotdata
from .resample import NATIVE_SIZES, PRESETS, condition_sizes, load_conditions, preset_conditions
from .stats import EXACT, T_APPROX, StatsError
from .stratify import StratumThresholds

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2


def _size(text: str) -> Size2D:
    try:
        w, h = text.lower().replace(" ", "").split("x")
        return Size2D(int(w), int(h)).validate()
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from exc


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = set(fmts) - {"csv", "json"}
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"format must be csv and/or json, got {text!r}")
    return fmts


def _config(args) -> RunConfig:
    return RunConfig(
        manifests=[Path(m) for m in args.manifest],
        conditions=args.conditions,
        pred_root=Path(args.pred_root) if getattr(args, "pred_root", None) else None,
        threshold=getattr(args, "threshold", 0.5),
        strata=StratumThresholds.parse(args.strata),
        out=Path(args.out),
        formats=getattr(args, "format", ("csv",)),
        plotdata=getattr(args, "plotdata", False),
        workers=args.workers,
        use_fov=getattr(args, "fov", False),
        upsample_probabilities=getattr(args, "upsample_probabilities", False),
    )


def cmd_sizes(args) -> int:
    if args.native:
        targets = [(args.dataset[0] if args.dataset else "custom", args.native)]
    else:
        names = args.dataset or list(NATIVE_SIZES)
        try:
            targets = [(n, NATIVE_SIZES[n.upper()]) for n in names]
        except KeyError as exc:
            raise MaskError(f"unknown dataset {exc.args[0]!r}; pass --native WxH") from None
    for dataset, native in targets:
        if Path(args.conditions).is_file():
            conds = load_conditions(args.conditions)
        else:
            conds = preset_conditions(args.conditions, dataset)
        for name, size in condition_sizes(native, conds):
            print(f"{dataset}\t{name}\t{size.width} x {size.height}\t{native.width / size.width:.2f}x")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _config(args)
    report = run_evaluate(config)
    for path in report.write(config.out, config.formats):
        print(path)
    if config.plotdata:
        for path in emit_plotdata(report, config.out / "plotdata"):
            print(path)
    return EXIT_PARTIAL if report.incomplete else EXIT_OK


def cmd_decimate(args) -> int:
    config = _config(args)
    table = run_decimation_audit(config)
    print(write_decimation_csv(table, config.out / "decimation.csv"))
    return EXIT_OK


def cmd_stats(args) -> int:
    result = run_stats(args.results, args.a, args.b, args.test, dataset=args.dataset, method=args.method)
    print(f"test\t{args.test}")
    print(f"statistic\t{result.statistic:.6f}")
    print(f"p\t{result.p_value:.6g}")
    print(f"method\t{result.method}")
    print(f"n\t{result.n}")
    if result.degenerate:
        print("degenerate\tall differences zero")
    return EXIT_OK


def cmd_phantom(args) -> int:
    conditions = load_conditions(args.conditions) if args.conditions else None
    print(write_phantom_suite(args.out, predictions=args.predictions, conditions=conditions))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vessel-audit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sizes", help="print processed sizes for a preset")
    p.add_argument("--conditions", default="paper-table2", help=f"preset ({', '.join(PRESETS)}) or JSON file")
    p.add_argument("--dataset", action="append", help="dataset name (repeatable); default: all known")
    p.add_argument("--native", type=_size, help="native size WxH for a dataset not in the preset")
    p.set_defaults(func=cmd_sizes)

    def common(p):
        p.add_argument("--manifest", action="append", required=True, help="dataset manifest (repeatable)")
        p.add_argument("--conditions", default="paper-table2", help="preset name or JSON condition list")
        p.add_argument("--strata", default="3,7", help="thin/thick half-width cut points")
        p.add_argument("--out", default="out")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("evaluate", help="score predictions and write the summary table")
    common(p)
    p.add_argument("--pred-root", help="directory holding <condition>/<image_id>.png predictions")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--format", type=_formats, default=("csv",), help="csv, json or csv,json")
    p.add_argument("--fov", action="store_true", help="restrict specificity to manifest FOV masks")
    p.add_argument("--plotdata", action="store_true", help="also write figure series CSVs")
    p.add_argument(
        "--upsample-probabilities",
        action="store_true",
        help="resize probability maps bilinearly before thresholding",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("decimate", help="ground-truth round-trip loss per width stratum")
    common(p)
    p.set_defaults(func=cmd_decimate)

    p = sub.add_parser("stats", help="paired test on two columns of a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--a", required=True, help="first column")
    p.add_argument("--b", required=True, help="second column")
    p.add_argument("--test", choices=("wilcoxon", "spearman"), required=True)
    p.add_argument("--dataset", help="only rows whose dataset column equals this")
    p.add_argument("--method", choices=(T_APPROX, EXACT), default=T_APPROX, help="Spearman p-value method")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("phantom", help="write the phantom suite, manifest and expectations")
    p.add_argument("--out", required=True)
    p.add_argument("--predictions", action="store_true", help="also write decimated ground truth as predictions")
    p.add_argument("--conditions", help="JSON condition list for --predictions (default R1-R4 scales)")
    p.set_defaults(func=cmd_phantom)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MaskError, StatsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
