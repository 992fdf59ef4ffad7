"""Command-line entry point.

Subcommands mirror the harness experiments; common flags can also come from
a JSON config file (``--config``), with explicit flags taking precedence.
Archive dataset names resolve under ``$FREQLENS_DATA_ROOT``.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import ExperimentConfig, emit_reports, run_experiment

_KIND_BY_COMMAND = {
    "train": "train",
    "sweep-depth": "depth_sweep",
    "band": "band_filter",
    "restore-lfc": "lfc_restore",
    "skip-sweep": "skip_sweep",
    "regulate": "regulate",
    "gradcam": "gradcam",
    "centroid-stats": "centroid_stats",
}


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file mirroring the experiment config")
    p.add_argument("--dataset", help="synth:lowfreq[,..], a .ts/.csv path, or an archive name")
    p.add_argument("--backbone", choices=["fcn", "resnet"])
    p.add_argument("--depth", type=int)
    p.add_argument("--depths", type=_int_list, help="comma-separated depth list")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--alpha", type=int, help="regulation epoch")
    p.add_argument("--skips", type=int, help="maximum units to skip")
    p.add_argument("--seed", type=int, help="single seed (equivalent to --seeds N)")
    p.add_argument("--seeds", type=_int_list, help="comma-separated seed list")
    p.add_argument("--fractions", type=_float_list, help="restore fractions")
    p.add_argument("--no-znorm", action="store_true", help="skip per-instance z-normalization")
    p.add_argument("--use-regulator", action="store_true")
    p.add_argument("--checkpoint", help="load this checkpoint instead of training")
    p.add_argument("--instance", type=int, dest="gradcam_instance")
    p.add_argument("--class-index", type=int, dest="gradcam_class")
    p.add_argument("--data-root", dest="data_root")
    p.add_argument("--out", dest="out_dir")


def _build_config(kind: str, args: argparse.Namespace) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        base = json.loads(open(args.config).read())
    base["kind"] = kind
    overrides = {
        "dataset": args.dataset,
        "backbone": args.backbone,
        "depth": args.depth,
        "depths": args.depths,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "alpha": args.alpha,
        "skips": args.skips,
        "seeds": args.seeds if args.seeds else ([args.seed] if args.seed is not None else None),
        "fractions": args.fractions,
        "use_regulator": True if args.use_regulator else None,
        "checkpoint": args.checkpoint,
        "gradcam_instance": args.gradcam_instance,
        "gradcam_class": args.gradcam_class,
        "data_root": args.data_root,
        "out_dir": args.out_dir,
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if args.no_znorm:
        base["znorm"] = False
    if "dataset" not in base:
        raise SystemExit("a dataset is required (--dataset or config file)")
    return ExperimentConfig.from_dict(base)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="freqlens",
        description="Train 1D-CNN time-series classifiers and analyze their frequency focus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _KIND_BY_COMMAND:
        p = sub.add_parser(command)
        _add_common(p)
    rp = sub.add_parser("report", help="aggregate runs.csv files and emit rank tables")
    rp.add_argument("--runs", nargs="+", required=True, help="run output directories")
    rp.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "report":
        result = emit_reports(args.runs, args.out)
        print(f"wrote combined.csv ({result['combined_rows']} rows) and ranks.csv to {args.out}")
        return 0

    cfg = _build_config(_KIND_BY_COMMAND[args.command], args)
    payload = run_experiment(cfg)
    print(json.dumps({k: v for k, v in payload.items() if k not in ("config",)},
                     sort_keys=True, indent=2))
    print(f"artifacts written to {cfg.out_dir}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
