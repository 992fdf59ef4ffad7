"""Frequency-focus analysis of conv feature maps and gated regulation.

The pipeline: capture each unit's post-activation feature maps, turn every
channel into a batch-averaged amplitude spectrum, score each channel's
spectral concentration (peak-to-RMS ratio), and take the per-unit variance
of those scores as the unit's *focus scale*. Units whose focus scale drops
relative to their predecessor are *narrowing* the range of frequency
features the network responds to; the regulator skips the worst offenders
via the gating mechanism partway through training and finishes training the
slimmer network.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .net.network import GatePlan, Network, NetworkSpec
from .net.training import Adam, TrainConfig, TrainResult, train_network
from .spectral import Spectrum, focus_scale, frequency_centroid, peak_rms_ratio

__all__ = [
    "FocusReport",
    "RegulationResult",
    "RegulatorConfig",
    "compute_focus_report",
    "detect_degradation",
    "feature_map_spectra",
    "focus_deltas",
    "regulate_training",
    "resume_training",
    "select_skips",
]


def feature_map_spectra(
    captured: Sequence[np.ndarray], sampling_freq: float = 1.0
) -> list[list[Spectrum]]:
    """Batch-averaged amplitude spectrum of every channel of every unit.

    ``captured[i]`` is unit ``i+1``'s output of shape (batch, channels,
    length). Per-instance spectra are averaged elementwise after the
    amplitude transform, giving one spectrum per channel.
    """
    out = []
    for maps in captured:
        maps = np.asarray(maps, dtype=np.float64)
        n, c, h = maps.shape
        b = (h - 1) // 2 + 1
        amps = np.abs(np.fft.rfft(maps, axis=2))[:, :, :b] / h
        mean_amps = amps.mean(axis=0)
        out.append(
            [Spectrum(mean_amps[j], sampling_freq, h) for j in range(c)]
        )
    return out


@dataclass
class FocusReport:
    """Per-unit focus metrics and the skip candidates they imply.

    ``channel_ratios[i]`` holds unit ``i+1``'s per-channel peak-to-RMS
    ratios with NaN at dead (all-zero) channels. ``deltas[0]`` is defined
    as 0: the first unit has no predecessor and is never a skip candidate.
    Unit indices in ``narrowing_units`` are 1-based.
    """

    channel_ratios: list[np.ndarray]
    focus_scales: np.ndarray
    deltas: np.ndarray
    narrowing_units: tuple[int, ...]
    centroids: np.ndarray
    live_channels: tuple[int, ...]
    unit_channels: tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.focus_scales)

    def to_dict(self) -> dict:
        return {
            "units": [
                {
                    "unit": i + 1,
                    "channels": int(len(self.channel_ratios[i])),
                    "live_channels": int(self.live_channels[i]),
                    "focus_scale": float(self.focus_scales[i]),
                    "delta": float(self.deltas[i]),
                    "narrowing": (i + 1) in self.narrowing_units,
                    "centroid": None if np.isnan(self.centroids[i]) else float(self.centroids[i]),
                    "channel_ratios": [
                        None if np.isnan(r) else float(r) for r in self.channel_ratios[i]
                    ],
                }
                for i in range(self.depth)
            ],
            "narrowing_units": list(self.narrowing_units),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FocusReport":
        units = d["units"]
        ratios = [
            np.array([np.nan if r is None else r for r in u["channel_ratios"]], dtype=np.float64)
            for u in units
        ]
        return cls(
            channel_ratios=ratios,
            focus_scales=np.array([u["focus_scale"] for u in units]),
            deltas=np.array([u["delta"] for u in units]),
            narrowing_units=tuple(d["narrowing_units"]),
            centroids=np.array(
                [np.nan if u["centroid"] is None else u["centroid"] for u in units]
            ),
            live_channels=tuple(u["live_channels"] for u in units),
            unit_channels=tuple(u["channels"] for u in units),
        )


def focus_deltas(scales) -> tuple[np.ndarray, tuple[int, ...]]:
    """Successive focus-scale changes and the (1-based) units where they drop.

    The first unit has no predecessor; its delta is 0 and it is never a
    candidate.
    """
    scales = np.asarray(scales, dtype=np.float64)
    deltas = np.zeros_like(scales)
    deltas[1:] = scales[1:] - scales[:-1]
    narrowing = tuple(i + 1 for i in range(1, len(scales)) if deltas[i] < 0.0)
    return deltas, narrowing


def compute_focus_report(
    captured: Sequence[np.ndarray], sampling_freq: float = 1.0
) -> FocusReport:
    """Focus scales, successive deltas, and narrowing units for one capture.

    Dead channels (all-zero spectra) are excluded from the ratio population;
    a unit whose channels are all dead reports focus scale 0 with a warning.
    """
    if len(captured) == 0:
        raise ValueError("need feature maps for at least one unit")
    spectra = feature_map_spectra(captured, sampling_freq)
    ratios_per_unit: list[np.ndarray] = []
    scales = []
    centroids = []
    live_counts = []
    for i, unit_spectra in enumerate(spectra):
        ratios = np.full(len(unit_spectra), np.nan)
        cents = []
        for j, spec in enumerate(unit_spectra):
            if spec.is_degenerate():
                continue
            ratios[j] = peak_rms_ratio(spec)
            cents.append(frequency_centroid(spec, units="normalized"))
        live = int(np.sum(~np.isnan(ratios)))
        live_counts.append(live)
        if live == 0:
            warnings.warn(
                f"unit {i + 1}: all channels dead; focus scale set to 0", RuntimeWarning
            )
            scales.append(0.0)
            centroids.append(np.nan)
        else:
            scales.append(focus_scale(ratios[~np.isnan(ratios)]))
            centroids.append(float(np.mean(cents)))
        ratios_per_unit.append(ratios)

    scales_arr = np.asarray(scales)
    deltas, narrowing = focus_deltas(scales_arr)
    return FocusReport(
        channel_ratios=ratios_per_unit,
        focus_scales=scales_arr,
        deltas=deltas,
        narrowing_units=narrowing,
        centroids=np.asarray(centroids),
        live_channels=tuple(live_counts),
        unit_channels=tuple(len(u) for u in spectra),
    )


def select_skips(report: FocusReport, max_skips: int, spec: NetworkSpec) -> GatePlan:
    """Gate plan skipping the most negative narrowing units, at most ``max_skips``.

    Candidates are exactly the narrowing units; ties in the delta break
    toward the shallower unit. Adapters are synthesized wherever a preserved
    unit's input width no longer matches after the skips.
    """
    if max_skips < 1:
        raise ValueError("max_skips must be >= 1")
    if report.depth != spec.depth:
        raise ValueError("report depth does not match spec depth")
    candidates = sorted(report.narrowing_units, key=lambda u: (report.deltas[u - 1], u))
    chosen = set(candidates[: min(max_skips, len(candidates))])
    gates = tuple(0 if (i + 1) in chosen else 1 for i in range(spec.depth))
    return GatePlan.for_gates(spec, gates)


def detect_degradation(
    acc_by_depth: Mapping[int, float], threshold: float = 0.05
) -> list[int]:
    """Depths whose accuracy sits >= ``threshold`` below the best shallower depth.

    The threshold is in absolute accuracy points (default 5).
    """
    if len(acc_by_depth) < 2:
        return []
    flagged = []
    best_shallower = None
    for depth in sorted(acc_by_depth):
        acc = acc_by_depth[depth]
        if best_shallower is not None and best_shallower - acc >= threshold - 1e-12:
            flagged.append(depth)
        if best_shallower is None or acc > best_shallower:
            best_shallower = acc
    return flagged


@dataclass(frozen=True)
class RegulatorConfig:
    """When to regulate (epoch) and how many units may be skipped."""

    regulation_epoch: int = 100
    max_skips: int = 2

    def __post_init__(self):
        if self.regulation_epoch < 1:
            raise ValueError("regulation_epoch must be >= 1")
        if self.max_skips < 1:
            raise ValueError("max_skips must be >= 1")

    def to_dict(self) -> dict:
        return {"regulation_epoch": self.regulation_epoch, "max_skips": self.max_skips}

    @classmethod
    def from_dict(cls, d: dict) -> "RegulatorConfig":
        return cls(**d)


@dataclass
class RegulationResult:
    network: Network
    plan: GatePlan
    report: FocusReport
    stage1: TrainResult
    stage2: TrainResult
    optimizer: Adam
    checkpoint_values: dict[str, np.ndarray]
    checkpoint_optimizer: dict
    metrics: dict = field(default_factory=dict)


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "values") and hasattr(data, "labels"):
        return np.asarray(data.values, dtype=np.float64), np.asarray(data.labels, dtype=np.int64)
    x, y = data
    return np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.int64)


def regulate_training(
    spec: NetworkSpec,
    data,
    train_cfg: TrainConfig,
    reg_cfg: RegulatorConfig,
    sampling_freq: float = 1.0,
) -> RegulationResult:
    """Two-stage training with one mid-run regulation point.

    Trains the full network for ``reg_cfg.regulation_epoch`` epochs, computes
    the focus report on a capture of that epoch's final batch, derives the
    gate plan, transfers every preserved unit's parameters (and their Adam
    moments) into the gated network, and trains it for the remaining epochs.
    The total number of epochs is unchanged. When no unit narrows, training
    simply continues on the original network, bit-for-bit identical to an
    unregulated run.
    """
    alpha = reg_cfg.regulation_epoch
    if alpha >= train_cfg.epochs:
        raise ValueError("regulation_epoch must be smaller than the epoch count")
    x, y = _as_xy(data)

    net = Network(spec)
    stage1, optimizer = train_network(
        net, x, y, train_cfg, first_epoch=1, last_epoch=alpha, capture_final_batch=True
    )
    report = compute_focus_report(stage1.captured, sampling_freq)
    plan = select_skips(report, reg_cfg.max_skips, spec)
    checkpoint_values = net.get_values()
    checkpoint_opt = optimizer.state_dict()

    if not plan.skipped:
        regulated, reg_opt = net, optimizer
    else:
        regulated = Network(spec, plan)
        transferable = dict(checkpoint_values)
        loaded = regulated.set_values(transferable, strict=False)
        reg_opt = Adam()
        param_shapes = {name: value.shape for name, value, _ in regulated.param_items()}
        reg_opt.t = optimizer.t
        for name, shape in param_shapes.items():
            if name in optimizer.m and optimizer.m[name].shape == shape:
                reg_opt.m[name] = optimizer.m[name].copy()
                reg_opt.v[name] = optimizer.v[name].copy()
        if "head.linear.w" not in loaded:
            warnings.warn(
                "head input width changed after skips; classifier head re-initialized",
                RuntimeWarning,
            )

    stage2, reg_opt = train_network(
        regulated, x, y, train_cfg, optimizer=reg_opt,
        first_epoch=alpha + 1, last_epoch=train_cfg.epochs,
    )
    return RegulationResult(
        network=regulated,
        plan=plan,
        report=report,
        stage1=stage1,
        stage2=stage2,
        optimizer=reg_opt,
        checkpoint_values=checkpoint_values,
        checkpoint_optimizer=checkpoint_opt,
    )


def resume_training(
    spec: NetworkSpec,
    plan: Optional[GatePlan],
    values: dict[str, np.ndarray],
    optimizer_state: dict,
    data,
    train_cfg: TrainConfig,
    first_epoch: int,
) -> tuple[Network, TrainResult]:
    """Continue training from checkpointed values along the seeded batch order.

    With the all-on plan this reproduces the tail of a plain full-length run
    exactly; with a gate plan it retrains the gated network from the same
    checkpoint (parameters transfer where shapes allow).
    """
    x, y = _as_xy(data)
    net = Network(spec, plan)
    net.set_values(values, strict=plan is None or not plan.skipped)
    optimizer = Adam()
    if plan is None or not plan.skipped:
        optimizer.load_state_dict(optimizer_state)
    else:
        optimizer.t = int(optimizer_state["t"])
        shapes = {name: value.shape for name, value, _ in net.param_items()}
        for name, shape in shapes.items():
            m = optimizer_state["m"].get(name)
            if m is not None and m.shape == shape:
                optimizer.m[name] = m.copy()
                optimizer.v[name] = optimizer_state["v"][name].copy()
    result, optimizer = train_network(
        net, x, y, train_cfg, optimizer=optimizer,
        first_epoch=first_epoch, last_epoch=train_cfg.epochs,
    )
    return net, result
