"""Experiment orchestration: depth sweeps, band experiments, regulator runs.

Every runner takes an :class:`ExperimentConfig`, trains deterministically
from the configured seeds, and writes into the output directory:

* ``report.json``   - the full result payload; deterministic, so replaying a
  config+seed combination reproduces it bit for bit (wall times live in
  ``timings.json`` and in the CSV instead);
* ``runs.csv``      - one row per trained model
  (dataset, model, depth, regulated, accuracy, params, flops, seconds);
* ``plotdata_*.json`` - x/y series for the figure analogs;
* experiment artifacts (checkpoints, focus reports, attribution CSVs).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import (
    TimeSeriesDataset,
    dataset_centroid_ratio,
    filter_dataset,
    load_csv_file,
    load_ts_file,
    split_dataset,
    synth_lowfreq_dataset,
    znormalize,
)
from .focus import (
    RegulatorConfig,
    compute_focus_report,
    detect_degradation,
    regulate_training,
    resume_training,
)
from .gradcam import grad_cam, write_attribution_csv
from .net import (
    GatePlan,
    Network,
    TrainConfig,
    count_params_flops,
    evaluate,
    fcn_spec,
    load_checkpoint,
    resnet_spec,
    save_checkpoint,
    train_network,
)
from .spectral import BandMode

DATA_ROOT_ENV = "FREQLENS_DATA_ROOT"

EXPERIMENT_KINDS = (
    "train",
    "depth_sweep",
    "band_filter",
    "lfc_restore",
    "skip_sweep",
    "regulate",
    "gradcam",
    "centroid_stats",
)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    dataset: str
    backbone: str = "resnet"
    depth: int = 5
    depths: tuple[int, ...] = ()
    epochs: int = 200
    batch_size: int = 16
    learning_rate: float = 1e-3
    alpha: int = 100
    skips: int = 2
    seeds: tuple[int, ...] = (0, 1, 2)
    fractions: tuple[float, ...] = (0.05, 0.10, 0.15, 0.20, 0.25)
    test_fraction: float = 0.5
    znorm: bool = True
    use_regulator: bool = False
    gradcam_instance: int = 0
    gradcam_class: Optional[int] = None
    checkpoint: Optional[str] = None
    data_root: Optional[str] = None
    out_dir: str = "runs/out"

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.backbone not in ("fcn", "resnet"):
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["depths"] = list(self.depths)
        d["seeds"] = list(self.seeds)
        d["fractions"] = list(self.fractions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        for key in ("depths", "seeds", "fractions"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RunReport:
    """One model's results over the configured seeds."""

    dataset: str
    backbone: str
    depth: int
    regulated: bool
    seeds: tuple[int, ...]
    train_acc: list[float]
    test_acc: list[float]
    params: int
    flops: int
    seconds: list[float] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def median_train(self) -> float:
        return float(statistics.median(self.train_acc))

    @property
    def median_test(self) -> float:
        return float(statistics.median(self.test_acc))

    @property
    def model(self) -> str:
        suffix = "+reg" if self.regulated else ""
        return f"{self.backbone}-d{self.depth}{suffix}"

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "backbone": self.backbone,
            "depth": self.depth,
            "regulated": self.regulated,
            "model": self.model,
            "seeds": list(self.seeds),
            "train_acc": self.train_acc,
            "test_acc": self.test_acc,
            "median_train": self.median_train,
            "median_test": self.median_test,
            "params": self.params,
            "flops": self.flops,
            **({"extra": self.extra} if self.extra else {}),
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for i, seed in enumerate(self.seeds):
            rows.append(
                {
                    "dataset": self.dataset,
                    "model": self.model,
                    "depth": self.depth,
                    "regulated": int(self.regulated),
                    "seed": seed,
                    "train_acc": self.train_acc[i],
                    "test_acc": self.test_acc[i],
                    "params": self.params,
                    "flops": self.flops,
                    "seconds": self.seconds[i] if i < len(self.seconds) else "",
                }
            )
        return rows


# -- dataset resolution --------------------------------------------------------


def _parse_synth(spec: str) -> TimeSeriesDataset:
    # synth:lowfreq[,classes=2][,n=400][,t=128][,noise=0.1][,seed=0][,channels=1]
    body = spec.split(":", 1)[1]
    parts = [p for p in body.split(",") if p]
    if not parts or parts[0] != "lowfreq":
        raise ValueError(f"unknown synthetic dataset {spec!r}")
    kw = {"classes": 2, "n": 400, "t": 128, "noise": 0.1, "seed": 0, "channels": 1}
    for p in parts[1:]:
        key, _, value = p.partition("=")
        if key not in kw:
            raise ValueError(f"unknown synth parameter {key!r}")
        kw[key] = float(value) if key == "noise" else int(value)
    return synth_lowfreq_dataset(
        classes=kw["classes"],
        instances=kw["n"],
        length=kw["t"],
        hf_noise_amplitude=kw["noise"],
        seed=kw["seed"],
        channels=kw["channels"],
    )


def resolve_dataset(cfg: ExperimentConfig) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """Resolve the config's dataset string into a (train, test) pair.

    Accepts ``synth:lowfreq,...`` generators, paths to ``.ts``/``.csv``
    files (a ``_TRAIN``/``_TEST`` sibling is used when present), or archive
    names resolved under ``$FREQLENS_DATA_ROOT/<name>/<name>_TRAIN.ts``.
    """
    spec = cfg.dataset
    if spec.startswith("synth:"):
        full = _parse_synth(spec)
        train, test = split_dataset(full, cfg.test_fraction, seed=0)
    else:
        path = Path(spec)
        if not path.exists():
            root = cfg.data_root or os.environ.get(DATA_ROOT_ENV, "")
            candidate = Path(root) / spec / f"{spec}_TRAIN.ts"
            if not root or not candidate.exists():
                raise FileNotFoundError(
                    f"dataset {spec!r} not found (set ${DATA_ROOT_ENV} for archive names)"
                )
            path = candidate
        loader = load_csv_file if path.suffix.lower() == ".csv" else load_ts_file
        train = loader(path)
        test = None
        stem = path.stem
        if "_TRAIN" in stem:
            sibling = path.with_name(path.name.replace("_TRAIN", "_TEST"))
            if sibling.exists():
                test = loader(sibling)
        if test is None:
            train, test = split_dataset(train, cfg.test_fraction, seed=0)
    if cfg.znorm:
        train, test = znormalize(train), znormalize(test)
    return train, test


# -- helpers ---------------------------------------------------------------------


def _spec_for(cfg: ExperimentConfig, ds: TimeSeriesDataset, depth: int, seed: int):
    if cfg.backbone == "fcn":
        return fcn_spec(depth, ds.n_channels, ds.n_classes, seed)
    return resnet_spec(depth, ds.n_channels, ds.n_classes, seed)


def _train_cfg(cfg: ExperimentConfig, seed: int, epochs: Optional[int] = None) -> TrainConfig:
    return TrainConfig(
        epochs=epochs if epochs is not None else cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=seed,
    )


def _train_eval(
    cfg: ExperimentConfig,
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    depth: int,
    seed: int,
) -> tuple[Network, float, float, float]:
    spec = _spec_for(cfg, train, depth, seed)
    net = Network(spec)
    started = time.perf_counter()
    train_network(net, train.values, train.labels, _train_cfg(cfg, seed))
    seconds = time.perf_counter() - started
    return (
        net,
        evaluate(net, train.values, train.labels),
        evaluate(net, test.values, test.labels),
        seconds,
    )


def _run_report(
    cfg: ExperimentConfig,
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    depth: int,
    regulated: bool = False,
) -> tuple[RunReport, list[Network]]:
    nets = []
    report = RunReport(
        dataset=train.name,
        backbone=cfg.backbone,
        depth=depth,
        regulated=regulated,
        seeds=cfg.seeds,
        train_acc=[],
        test_acc=[],
        params=0,
        flops=0,
    )
    for seed in cfg.seeds:
        net, tr, te, seconds = _train_eval(cfg, train, test, depth, seed)
        report.train_acc.append(tr)
        report.test_acc.append(te)
        report.seconds.append(seconds)
        nets.append(net)
    spec = _spec_for(cfg, train, depth, cfg.seeds[0])
    report.params, report.flops = count_params_flops(spec, length=train.length)
    return report, nets


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_outputs(cfg: ExperimentConfig, payload: dict, reports: list[RunReport]) -> dict:
    out = _out_dir(cfg)
    payload = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        **payload,
    }
    (out / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2))
    timings = {
        rep.model: rep.seconds for rep in reports
    }
    (out / "timings.json").write_text(json.dumps(timings, sort_keys=True, indent=2))
    rows = [row for rep in reports for row in rep.csv_rows()]
    if rows:
        with open(out / "runs.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return payload


def _write_plotdata(cfg: ExperimentConfig, name: str, x: list, series: dict) -> None:
    out = _out_dir(cfg)
    (out / f"plotdata_{name}.json").write_text(
        json.dumps({"x": x, "series": series}, sort_keys=True, indent=2)
    )


def average_ranks(scores: dict[str, float]) -> dict[str, float]:
    """Rank models by score, best = 1, ties averaged."""
    ordered = sorted(scores, key=lambda k: -scores[k])
    ranks: dict[str, float] = {}
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and scores[ordered[j + 1]] == scores[ordered[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[ordered[k]] = avg
        i = j + 1
    return ranks


# -- runners ---------------------------------------------------------------------


def run_train(cfg: ExperimentConfig) -> dict:
    train, test = resolve_dataset(cfg)
    report, nets = _run_report(cfg, train, test, cfg.depth)
    out = _out_dir(cfg)
    for seed, net in zip(cfg.seeds, nets):
        save_checkpoint(out / f"checkpoint_seed{seed}.bin", net)
    return _write_outputs(cfg, {"kind": "train", "runs": [report.to_dict()]}, [report])


def run_depth_sweep(cfg: ExperimentConfig) -> dict:
    """Train each depth with identical seeds/data and flag degraded depths."""
    train, test = resolve_dataset(cfg)
    depths = cfg.depths or (cfg.depth,)
    reports = []
    for depth in depths:
        report, _ = _run_report(cfg, train, test, depth)
        reports.append(report)
    acc_by_depth = {rep.depth: rep.median_test for rep in reports}
    flags = detect_degradation(acc_by_depth)
    _write_plotdata(
        cfg,
        "depth_sweep",
        list(depths),
        {"median_test_acc": [acc_by_depth[d] for d in depths]},
    )
    payload = {
        "kind": "depth_sweep",
        "runs": [rep.to_dict() for rep in reports],
        "acc_by_depth": {str(d): acc_by_depth[d] for d in depths},
        "degraded_depths": flags,
    }
    return _write_outputs(cfg, payload, reports)


def run_band_experiment(cfg: ExperimentConfig) -> dict:
    """Train/test accuracy per depth on low-band-only and high-band-only data.

    Also trains an unfiltered baseline and evaluates it on a fraction-1.0
    restore of the test set as a calibration control (the two accuracies
    must agree).
    """
    train, test = resolve_dataset(cfg)
    variants = {}
    for band, mode in (("lfc", BandMode.KEEP_LFC), ("hfc", BandMode.KEEP_HFC)):
        ftrain, ftest = filter_dataset(train, mode), filter_dataset(test, mode)
        if not np.any(ftrain.values) or not np.any(ftest.values):
            raise ValueError(
                f"band filter {band!r} produced an all-zero dataset; "
                "nothing left to train on"
            )
        variants[band] = (ftrain, ftest)
    restore_test = filter_dataset(test, BandMode.RESTORE_LFC_FRACTION, fraction=1.0)

    depths = cfg.depths or (cfg.depth,)
    reports = []
    table = []
    for depth in depths:
        for band, (ftrain, ftest) in variants.items():
            rep, _ = _run_report(cfg, ftrain, ftest, depth)
            rep.extra["band"] = band
            reports.append(rep)
            table.append(
                {
                    "depth": depth,
                    "band": band,
                    "median_train_acc": rep.median_train,
                    "median_test_acc": rep.median_test,
                }
            )
        base_rep, base_nets = _run_report(cfg, train, test, depth)
        base_rep.extra["band"] = "unfiltered"
        reports.append(base_rep)
        control_accs = [
            evaluate(net, restore_test.values, restore_test.labels) for net in base_nets
        ]
        table.append(
            {
                "depth": depth,
                "band": "unfiltered",
                "median_train_acc": base_rep.median_train,
                "median_test_acc": base_rep.median_test,
                "restore_control_acc": float(statistics.median(control_accs)),
            }
        )
    for split_key in ("median_train_acc", "median_test_acc"):
        _write_plotdata(
            cfg,
            f"band_{split_key}",
            list(depths),
            {
                band: [
                    next(r[split_key] for r in table if r["depth"] == d and r["band"] == band)
                    for d in depths
                ]
                for band in ("lfc", "hfc")
            },
        )
    return _write_outputs(
        cfg, {"kind": "band_filter", "table": table, "runs": [r.to_dict() for r in reports]}, reports
    )


def run_lfc_restore_experiment(cfg: ExperimentConfig) -> dict:
    """Evaluate a trained model on tests with growing low-band restoration.

    Fractions 0.0 and 1.0 are always included: they must coincide with the
    high-band-only and full-signal evaluations respectively. With
    ``use_regulator=True`` the evaluated model is the regulated network.
    """
    train, test = resolve_dataset(cfg)
    fractions = [0.0] + [f for f in cfg.fractions if 0.0 < f < 1.0] + [1.0]
    per_seed_acc = {f: [] for f in fractions}
    hfc_accs = []
    full_accs = []
    reports = []

    rep = RunReport(
        dataset=train.name, backbone=cfg.backbone, depth=cfg.depth,
        regulated=cfg.use_regulator, seeds=cfg.seeds,
        train_acc=[], test_acc=[], params=0, flops=0,
    )
    for seed in cfg.seeds:
        started = time.perf_counter()
        spec = _spec_for(cfg, train, cfg.depth, seed)
        if cfg.use_regulator:
            res = regulate_training(
                spec, (train.values, train.labels), _train_cfg(cfg, seed),
                RegulatorConfig(cfg.alpha, cfg.skips), sampling_freq=train.sampling_freq,
            )
            net, plan = res.network, res.plan
        else:
            net = Network(spec)
            train_network(net, train.values, train.labels, _train_cfg(cfg, seed))
            plan = net.plan
        rep.seconds.append(time.perf_counter() - started)
        rep.train_acc.append(evaluate(net, train.values, train.labels))
        rep.test_acc.append(evaluate(net, test.values, test.labels))
        full_accs.append(rep.test_acc[-1])
        hfc_test = filter_dataset(test, BandMode.KEEP_HFC)
        hfc_accs.append(evaluate(net, hfc_test.values, hfc_test.labels))
        for f in fractions:
            restored = filter_dataset(test, BandMode.RESTORE_LFC_FRACTION, fraction=f)
            per_seed_acc[f].append(evaluate(net, restored.values, restored.labels))
        rep.params, rep.flops = count_params_flops(spec, plan, length=train.length)
    reports.append(rep)

    medians = {f: float(statistics.median(per_seed_acc[f])) for f in fractions}
    payload = {
        "kind": "lfc_restore",
        "fractions": fractions,
        "acc_by_fraction": {f"{f:.2f}": medians[f] for f in fractions},
        "hfc_only_acc": float(statistics.median(hfc_accs)),
        "full_signal_acc": float(statistics.median(full_accs)),
        "runs": [rep.to_dict()],
    }
    _write_plotdata(cfg, "lfc_restore", fractions, {"median_test_acc": [medians[f] for f in fractions]})
    return _write_outputs(cfg, payload, reports)


def run_skip_sweep(cfg: ExperimentConfig) -> dict:
    """Skip each unit in turn, retraining from the regulation-epoch checkpoint."""
    train, test = resolve_dataset(cfg)
    depth = cfg.depth
    variants: dict[str, list[float]] = {"none": []}
    for unit in range(1, depth + 1):
        variants[f"skip{unit}"] = []
    deltas_per_seed = []
    reports = []

    for seed in cfg.seeds:
        spec = _spec_for(cfg, train, depth, seed)
        tcfg = _train_cfg(cfg, seed)
        if cfg.alpha >= tcfg.epochs:
            raise ValueError("alpha must be smaller than the epoch count")
        net = Network(spec)
        stage1, optimizer = train_network(
            net, train.values, train.labels, tcfg,
            first_epoch=1, last_epoch=cfg.alpha, capture_final_batch=True,
        )
        report = compute_focus_report(stage1.captured, train.sampling_freq)
        deltas_per_seed.append([float(d) for d in report.deltas])
        values, opt_state = net.get_values(), optimizer.state_dict()

        for variant in variants:
            if variant == "none":
                plan = GatePlan.all_on(depth)
            else:
                unit = int(variant[4:])
                gates = [1] * depth
                gates[unit - 1] = 0
                plan = GatePlan.for_gates(spec, gates)
            vnet, _ = resume_training(
                spec, plan, values, opt_state, (train.values, train.labels),
                tcfg, first_epoch=cfg.alpha + 1,
            )
            variants[variant].append(evaluate(vnet, test.values, test.labels))

    table = []
    median_deltas = [float(statistics.median(col)) for col in zip(*deltas_per_seed)]
    for variant, accs in variants.items():
        unit = None if variant == "none" else int(variant[4:])
        table.append(
            {
                "variant": variant,
                "unit": unit,
                "delta": None if unit is None else median_deltas[unit - 1],
                "median_test_acc": float(statistics.median(accs)),
                "test_acc": accs,
            }
        )
    rep = RunReport(
        dataset=train.name, backbone=cfg.backbone, depth=depth, regulated=False,
        seeds=cfg.seeds, train_acc=variants["none"], test_acc=variants["none"],
        params=0, flops=0,
    )
    spec0 = _spec_for(cfg, train, depth, cfg.seeds[0])
    rep.params, rep.flops = count_params_flops(spec0, length=train.length)
    _write_plotdata(
        cfg, "skip_sweep",
        [row["variant"] for row in table],
        {"median_test_acc": [row["median_test_acc"] for row in table]},
    )
    return _write_outputs(cfg, {"kind": "skip_sweep", "table": table}, [rep])


def run_regulate(cfg: ExperimentConfig) -> dict:
    """Regulated two-stage training vs. the unregulated continuation baseline.

    Both trajectories share the first ``alpha`` epochs (identical by the
    seeded batch order), so the baseline resumes from the regulation-epoch
    checkpoint rather than retraining from scratch.
    """
    train, test = resolve_dataset(cfg)
    reg_rep = RunReport(
        dataset=train.name, backbone=cfg.backbone, depth=cfg.depth, regulated=True,
        seeds=cfg.seeds, train_acc=[], test_acc=[], params=0, flops=0,
    )
    base_rep = RunReport(
        dataset=train.name, backbone=cfg.backbone, depth=cfg.depth, regulated=False,
        seeds=cfg.seeds, train_acc=[], test_acc=[], params=0, flops=0,
    )
    focus_reports = []
    plans = []
    out = _out_dir(cfg)

    for seed in cfg.seeds:
        spec = _spec_for(cfg, train, cfg.depth, seed)
        tcfg = _train_cfg(cfg, seed)
        started = time.perf_counter()
        res = regulate_training(
            spec, (train.values, train.labels), tcfg,
            RegulatorConfig(cfg.alpha, cfg.skips), sampling_freq=train.sampling_freq,
        )
        reg_seconds = time.perf_counter() - started
        reg_rep.train_acc.append(evaluate(res.network, train.values, train.labels))
        reg_rep.test_acc.append(evaluate(res.network, test.values, test.labels))
        reg_rep.seconds.append(reg_seconds)
        focus_reports.append(res.report.to_dict())
        plans.append(res.plan)

        started = time.perf_counter()
        base_net, _ = resume_training(
            spec, None, res.checkpoint_values, res.checkpoint_optimizer,
            (train.values, train.labels), tcfg, first_epoch=cfg.alpha + 1,
        )
        base_rep.train_acc.append(evaluate(base_net, train.values, train.labels))
        base_rep.test_acc.append(evaluate(base_net, test.values, test.labels))
        base_rep.seconds.append(time.perf_counter() - started)

        save_checkpoint(out / f"regulated_seed{seed}.bin", res.network, res.optimizer)

    spec0 = _spec_for(cfg, train, cfg.depth, cfg.seeds[0])
    base_rep.params, base_rep.flops = count_params_flops(spec0, length=train.length)
    reg_params_flops = [count_params_flops(spec0, plan, length=train.length) for plan in plans]
    reg_rep.params = int(statistics.median(p for p, _ in reg_params_flops))
    reg_rep.flops = int(statistics.median(f for _, f in reg_params_flops))
    reg_rep.extra["skipped_units"] = [list(plan.skipped) for plan in plans]

    (out / "focus_report.json").write_text(
        json.dumps({"per_seed": focus_reports}, sort_keys=True, indent=2)
    )
    payload = {
        "kind": "regulate",
        "runs": [reg_rep.to_dict(), base_rep.to_dict()],
        "regulated_median_test": reg_rep.median_test,
        "baseline_median_test": base_rep.median_test,
        "skipped_units": [list(plan.skipped) for plan in plans],
    }
    return _write_outputs(cfg, payload, [reg_rep, base_rep])


def run_gradcam(cfg: ExperimentConfig) -> dict:
    """Dump the temporal attribution of one test instance as CSV."""
    train, test = resolve_dataset(cfg)
    if cfg.checkpoint:
        net, _ = load_checkpoint(cfg.checkpoint)
        report = None
        reports = []
    else:
        report, nets = _run_report(
            cfg, train, test, cfg.depth
        )
        net = nets[0]
        reports = [report]
    idx = cfg.gradcam_instance
    if not 0 <= idx < test.n_instances:
        raise ValueError(f"instance index {idx} out of range")
    target = cfg.gradcam_class if cfg.gradcam_class is not None else int(test.labels[idx])
    result = grad_cam(net, test.values[idx], target)
    out = _out_dir(cfg)
    csv_path = out / f"gradcam_i{idx}_c{target}.csv"
    write_attribution_csv(result, csv_path)
    payload = {
        "kind": "gradcam",
        "instance": idx,
        "class_index": target,
        "score": result.score,
        "csv": csv_path.name,
        **({"runs": [report.to_dict()]} if report else {}),
    }
    return _write_outputs(cfg, payload, reports)


def run_centroid_stats(cfg: ExperimentConfig) -> dict:
    """Centroid-to-maximum-frequency ratio statistics for the dataset."""
    train, test = resolve_dataset(cfg)
    payload = {"kind": "centroid_stats", "splits": {}}
    for ds in (train, test):
        stats = dataset_centroid_ratio(ds)
        payload["splits"][ds.split] = {
            "mean_ratio": stats.mean,
            "variance": stats.variance,
            "counted": stats.counted,
            "skipped": stats.skipped,
        }
    return _write_outputs(cfg, payload, [])


RUNNERS = {
    "train": run_train,
    "depth_sweep": run_depth_sweep,
    "band_filter": run_band_experiment,
    "lfc_restore": run_lfc_restore_experiment,
    "skip_sweep": run_skip_sweep,
    "regulate": run_regulate,
    "gradcam": run_gradcam,
    "centroid_stats": run_centroid_stats,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.kind](cfg)


def emit_reports(run_dirs: list, out_dir) -> dict:
    """Merge run CSVs and rank models per dataset by median test accuracy."""
    rows = []
    for run_dir in run_dirs:
        path = Path(run_dir) / "runs.csv"
        if not path.exists():
            continue
        with open(path, newline="") as fh:
            rows.extend(csv.DictReader(fh))
    if not rows:
        raise ValueError("no runs.csv found in the given directories")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "combined.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    by_dataset: dict[str, dict[str, list[float]]] = {}
    for row in rows:
        by_dataset.setdefault(row["dataset"], {}).setdefault(row["model"], []).append(
            float(row["test_acc"])
        )
    rank_rows = []
    for dataset, models in sorted(by_dataset.items()):
        medians = {m: float(statistics.median(accs)) for m, accs in models.items()}
        ranks = average_ranks(medians)
        for model in sorted(models):
            rank_rows.append(
                {
                    "dataset": dataset,
                    "model": model,
                    "median_test_acc": medians[model],
                    "rank": ranks[model],
                }
            )
    with open(out / "ranks.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["dataset", "model", "median_test_acc", "rank"])
        writer.writeheader()
        writer.writerows(rank_rows)
    return {"combined_rows": len(rows), "rank_rows": rank_rows}
