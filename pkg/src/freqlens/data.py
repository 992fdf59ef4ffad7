"""Dataset ingestion, normalization, and synthetic generators.

Supports the UCR/UEA ``.ts`` text format (fixed-length series only) and a
CSV fallback with one instance per row (``channels * length`` values in
channel-major order, class label last). A JSON sidecar ``<file>.meta.json``
carries metadata the formats cannot express (sampling frequency, split,
declared class names).

Labels are stored as 0-based contiguous class indices; ``class_names``
preserves the labels as declared by the source file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .spectral import (
    BandMode,
    amplitude_spectrum,
    band_filter,
    BandFilterSpec,
    frequency_centroid,
    one_sided_bin_count,
)

__all__ = [
    "CentroidRatioStats",
    "TimeSeriesDataset",
    "dataset_centroid_ratio",
    "filter_dataset",
    "load_csv_file",
    "load_ts_file",
    "save_csv_file",
    "save_ts_file",
    "split_dataset",
    "synth_lowfreq_dataset",
    "znormalize",
]


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Fixed-length labeled instances of shape (instances, channels, length)."""

    values: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    sampling_freq: float = 1.0
    name: str = ""
    split: str = "train"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))
        if values.ndim != 3:
            raise ValueError(f"values must be (instances, channels, length), got {values.shape}")
        if labels.shape != (values.shape[0],):
            raise ValueError("labels must be one integer per instance")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        if len(self.class_names) < 1:
            raise ValueError("need at least one class name")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise ValueError("labels out of range for the declared classes")
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def length(self) -> int:
        return self.values.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


# -- .ts format ---------------------------------------------------------------


def _parse_bool(token: str, line_no: int) -> bool:
    t = token.strip().lower()
    if t == "true":
        return True
    if t == "false":
        return False
    raise ValueError(f"line {line_no}: expected true/false, got {token!r}")


def load_ts_file(path, split: Optional[str] = None) -> TimeSeriesDataset:
    """Load a UCR/UEA-style ``.ts`` file.

    Rejects variable-length series, timestamped files, and labels not
    declared in the ``@classLabel`` header. The split defaults to a
    ``_TRAIN``/``_TEST`` hint in the filename.
    """
    path = Path(path)
    name = path.stem
    class_names: Optional[list[str]] = None
    equal_length = True
    in_data = False
    rows: list[list[list[float]]] = []
    labels: list[str] = []

    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not in_data and line.startswith("@"):
                key, _, rest = line.partition(" ")
                key = key.lower()
                if key == "@problemname":
                    name = rest.strip() or name
                elif key == "@timestamps":
                    if _parse_bool(rest, line_no):
                        raise ValueError(f"{path}: timestamped series are unsupported")
                elif key == "@equallength":
                    equal_length = _parse_bool(rest, line_no)
                elif key == "@classlabel":
                    first, _, names = rest.strip().partition(" ")
                    if not _parse_bool(first, line_no):
                        raise ValueError(f"{path}: @classLabel false; classification needs labels")
                    class_names = names.split()
                    if not class_names:
                        raise ValueError(f"{path}: @classLabel declares no labels")
                elif key == "@data":
                    if class_names is None:
                        raise ValueError(f"{path}: missing @classLabel before @data")
                    if not equal_length:
                        raise ValueError(f"{path}: variable length unsupported")
                    in_data = True
                continue
            if not in_data:
                raise ValueError(f"{path} line {line_no}: data before @data tag")
            parts = line.split(":")
            if len(parts) < 2:
                raise ValueError(f"{path} line {line_no}: missing label separator ':'")
            label = parts[-1].strip()
            if label not in class_names:
                raise ValueError(f"{path} line {line_no}: unknown label {label!r}")
            channels = []
            for dim in parts[:-1]:
                tokens = [t for t in dim.split(",") if t.strip()]
                if any(t.strip() == "?" for t in tokens):
                    raise ValueError(f"{path} line {line_no}: missing values unsupported")
                channels.append([float(t) for t in tokens])
            rows.append(channels)
            labels.append(label)

    if not in_data or not rows:
        raise ValueError(f"{path}: no data section")
    d = len(rows[0])
    t = len(rows[0][0])
    for i, channels in enumerate(rows):
        if len(channels) != d or any(len(ch) != t for ch in channels):
            raise ValueError(f"{path}: variable length unsupported (instance {i + 1})")

    values = np.array(rows, dtype=np.float64)
    label_idx = np.array([class_names.index(l) for l in labels], dtype=np.int64)
    if split is None:
        upper = path.stem.upper()
        split = "test" if upper.endswith("_TEST") else "train"
    meta = _load_sidecar(path)
    return TimeSeriesDataset(
        values=values,
        labels=label_idx,
        class_names=tuple(class_names),
        sampling_freq=float(meta.get("sampling_freq", 1.0)),
        name=meta.get("name", name),
        split=split,
    )


def save_ts_file(ds: TimeSeriesDataset, path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"@problemName {ds.name or path.stem}\n")
        fh.write("@timeStamps false\n")
        fh.write(f"@univariate {'true' if ds.n_channels == 1 else 'false'}\n")
        if ds.n_channels > 1:
            fh.write(f"@dimensions {ds.n_channels}\n")
        fh.write("@equalLength true\n")
        fh.write(f"@seriesLength {ds.length}\n")
        fh.write(f"@classLabel true {' '.join(ds.class_names)}\n")
        fh.write("@data\n")
        for i in range(ds.n_instances):
            dims = [",".join(f"{v:.17g}" for v in ds.values[i, c]) for c in range(ds.n_channels)]
            fh.write(":".join(dims) + f":{ds.class_names[ds.labels[i]]}\n")
    _save_sidecar(ds, path)


# -- CSV fallback --------------------------------------------------------------


def load_csv_file(path, channels: Optional[int] = None) -> TimeSeriesDataset:
    """Load the CSV fallback format (channel-major values, label last)."""
    path = Path(path)
    meta = _load_sidecar(path)
    if channels is None:
        channels = int(meta.get("channels", 1))
    rows = []
    labels = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            labels.append(row[-1].strip())
            rows.append([float(v) for v in row[:-1]])
    if not rows:
        raise ValueError(f"{path}: empty file")
    total = len(rows[0])
    if any(len(r) != total for r in rows):
        raise ValueError(f"{path}: ragged rows")
    if total % channels != 0:
        raise ValueError(f"{path}: {total} values not divisible by {channels} channels")
    length = total // channels
    values = np.array(rows, dtype=np.float64).reshape(len(rows), channels, length)
    class_names = tuple(meta.get("class_names") or sorted(set(labels)))
    label_idx = np.array([class_names.index(l) for l in labels], dtype=np.int64)
    return TimeSeriesDataset(
        values=values,
        labels=label_idx,
        class_names=class_names,
        sampling_freq=float(meta.get("sampling_freq", 1.0)),
        name=meta.get("name", path.stem),
        split=meta.get("split", "train"),
    )


def save_csv_file(ds: TimeSeriesDataset, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(ds.n_instances):
            row = [f"{v:.17g}" for v in ds.values[i].reshape(-1)]
            row.append(ds.class_names[ds.labels[i]])
            writer.writerow(row)
    _save_sidecar(ds, path)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def _save_sidecar(ds: TimeSeriesDataset, path: Path) -> None:
    meta = {
        "name": ds.name,
        "channels": ds.n_channels,
        "length": ds.length,
        "sampling_freq": ds.sampling_freq,
        "split": ds.split,
        "class_names": list(ds.class_names),
    }
    _sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def _load_sidecar(path: Path) -> dict:
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        return json.loads(sidecar.read_text())
    return {}


# -- transforms ----------------------------------------------------------------


def znormalize(ds: TimeSeriesDataset, std_floor: float = 1e-8) -> TimeSeriesDataset:
    """Per-instance, per-channel zero mean / unit (population) std.

    Channels with std below ``std_floor`` are only mean-centered.
    """
    mean = ds.values.mean(axis=2, keepdims=True)
    std = ds.values.std(axis=2, keepdims=True)
    scale = np.where(std < std_floor, 1.0, std)
    return replace(ds, values=(ds.values - mean) / scale)


def filter_dataset(
    ds: TimeSeriesDataset, mode: BandMode, fraction: float = 0.0
) -> TimeSeriesDataset:
    """Band-filter every channel of every instance by its own centroid.

    All-zero channels have no spectrum and pass through unchanged.
    """
    out = np.empty_like(ds.values)
    for i in range(ds.n_instances):
        for c in range(ds.n_channels):
            series = ds.values[i, c]
            if not np.any(series):
                out[i, c] = series
                continue
            filt = BandFilterSpec.for_signal(series, mode, fraction, ds.sampling_freq)
            out[i, c] = band_filter(series, filt)
    return replace(ds, values=out)


def split_dataset(
    ds: TimeSeriesDataset, test_fraction: float = 0.5, seed: int = 0
) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """Deterministic stratified train/test split."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in range(ds.n_classes):
        idx = np.flatnonzero(ds.labels == cls)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(idx.size * test_fraction))
        test_idx.extend(idx[:n_test])
        train_idx.extend(idx[n_test:])
    train_idx = np.sort(np.array(train_idx, dtype=np.int64))
    test_idx = np.sort(np.array(test_idx, dtype=np.int64))
    train = replace(ds, values=ds.values[train_idx], labels=ds.labels[train_idx], split="train")
    test = replace(ds, values=ds.values[test_idx], labels=ds.labels[test_idx], split="test")
    return train, test


# -- synthetic data --------------------------------------------------------------


def synth_lowfreq_dataset(
    classes: int = 2,
    instances: int = 200,
    length: int = 128,
    hf_noise_amplitude: float = 0.1,
    seed: int = 0,
    class_bins: Optional[list[int]] = None,
    channels: int = 1,
    sampling_freq: float = 1.0,
) -> TimeSeriesDataset:
    """Classes separated by low-frequency tones under shared high-band noise.

    Class ``c`` contributes a unit tone at a distinct bin below ``length/8``
    with a random phase per instance; every instance additionally carries
    random-phase noise confined to bins above ``length/4``, scaled so its RMS
    matches a tone of amplitude ``hf_noise_amplitude``. Bit-reproducible for
    a given seed.
    """
    if classes < 2:
        raise ValueError("need at least two classes")
    if instances < classes:
        raise ValueError("need at least one instance per class")
    b = one_sided_bin_count(length)
    lf_max = length // 8
    if class_bins is None:
        if lf_max < 3:
            raise ValueError(f"length {length} too short for distinct low-band tones")
        spread = np.linspace(2, lf_max - 1, classes)
        class_bins = [int(round(v)) for v in spread]
        if len(set(class_bins)) != classes:
            raise ValueError(f"cannot place {classes} distinct tones below bin {lf_max}")
    if any(not 1 <= cb < b for cb in class_bins):
        raise ValueError("class bins must be in [1, bin_count)")

    hf_lo = length // 4 + 1
    hf_hi = (length // 2)  # rfft bins 0..length//2
    if hf_lo >= hf_hi:
        raise ValueError(f"length {length} too short for a high-frequency noise band")

    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    t = np.arange(length)
    values = np.empty((instances, channels, length))
    labels = np.empty(instances, dtype=np.int64)
    for i in range(instances):
        cls = i % classes
        labels[i] = cls
        for ch in range(channels):
            phase = rng.uniform(0.0, 2.0 * math.pi)
            amp = rng.uniform(0.9, 1.1)
            tone = amp * np.cos(2.0 * math.pi * class_bins[cls] * t / length + phase)
            noise = np.zeros(length)
            if hf_noise_amplitude > 0.0:
                coeffs = np.zeros(length // 2 + 1, dtype=np.complex128)
                re = rng.normal(size=hf_hi - hf_lo + 1)
                im = rng.normal(size=hf_hi - hf_lo + 1)
                coeffs[hf_lo:hf_hi + 1] = re + 1j * im
                noise = np.fft.irfft(coeffs, n=length)
                rms = math.sqrt(float(np.mean(noise**2)))
                if rms > 0.0:
                    noise *= (hf_noise_amplitude / math.sqrt(2.0)) / rms
            values[i, ch] = tone + noise
    return TimeSeriesDataset(
        values=values,
        labels=labels,
        class_names=tuple(str(c) for c in range(classes)),
        sampling_freq=sampling_freq,
        name=f"synth-lowfreq-c{classes}-n{instances}-t{length}",
        split="train",
    )


# -- statistics -------------------------------------------------------------------


@dataclass(frozen=True)
class CentroidRatioStats:
    """Mean and population variance of per-channel centroid/max-frequency ratios."""

    mean: float
    variance: float
    counted: int
    skipped: int


def dataset_centroid_ratio(ds: TimeSeriesDataset) -> CentroidRatioStats:
    """Frequency-centroid-to-maximum-frequency ratio across all channels.

    All-zero channels have no centroid; they are skipped and counted in
    ``skipped``.
    """
    ratios = []
    skipped = 0
    for i in range(ds.n_instances):
        for c in range(ds.n_channels):
            series = ds.values[i, c]
            spec = amplitude_spectrum(series, ds.sampling_freq)
            if spec.is_degenerate():
                skipped += 1
                continue
            ratios.append(frequency_centroid(spec, units="normalized"))
    if not ratios:
        raise ValueError("every channel in the dataset is degenerate")
    arr = np.asarray(ratios)
    return CentroidRatioStats(
        mean=float(arr.mean()),
        variance=float(arr.var()),
        counted=len(ratios),
        skipped=skipped,
    )
