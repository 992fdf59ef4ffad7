"""One-sided amplitude spectra and centroid-based band filtering.

Conventions used throughout:

* A length-``T`` real sequence maps to a one-sided spectrum with
  ``B = (T - 1) // 2 + 1`` bins (the Nyquist bin of even-length inputs is
  dropped). Bin ``b`` corresponds to physical frequency ``b * fs / T``.
* Amplitudes are ``|DFT(s)| / T`` with no doubling of non-DC bins.
* The frequency centroid is the amplitude-weighted mean bin; the bin at
  ``floor(centroid)`` belongs to the low-frequency side, so low/high bands
  always partition the full spectrum.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BandFilterSpec",
    "BandMode",
    "DegenerateSpectrumError",
    "Spectrum",
    "amplitude_spectrum",
    "band_filter",
    "filter_series",
    "focus_scale",
    "frequency_centroid",
    "one_sided_bin_count",
    "peak_rms_ratio",
]


class DegenerateSpectrumError(ValueError):
    """Raised for operations undefined on an all-zero spectrum."""


def one_sided_bin_count(length: int) -> int:
    """Number of one-sided spectrum bins for a length-``length`` sequence."""
    return (length - 1) // 2 + 1


def _validate_signal(signal) -> np.ndarray:
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got shape {s.shape}")
    if s.shape[0] < 2:
        raise ValueError(f"sequence too short for a spectrum: length {s.shape[0]} < 2")
    if not np.all(np.isfinite(s)):
        raise ValueError("sequence contains non-finite values")
    return s


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum of a single real-valued channel.

    Attributes
    ----------
    amplitudes : np.ndarray
        Nonnegative amplitude per bin, exactly ``(source_length - 1) // 2 + 1``
        entries. Bin 0 is DC.
    sampling_freq : float
        Sampling frequency of the source sequence (1.0 when dimensionless).
    source_length : int
        Length ``T`` of the sequence the spectrum was computed from.
    """

    amplitudes: np.ndarray
    sampling_freq: float
    source_length: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.float64)
        object.__setattr__(self, "amplitudes", amps)
        expected = one_sided_bin_count(self.source_length)
        if amps.ndim != 1 or amps.shape[0] != expected:
            raise ValueError(
                f"expected {expected} bins for source length {self.source_length}, "
                f"got {amps.shape}"
            )
        if not np.all(np.isfinite(amps)) or np.any(amps < 0):
            raise ValueError("amplitudes must be finite and nonnegative")
        if self.sampling_freq <= 0:
            raise ValueError("sampling_freq must be positive")

    @property
    def bin_count(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        """Physical frequency of each bin: ``b * sampling_freq / source_length``."""
        return np.arange(self.bin_count) * (self.sampling_freq / self.source_length)

    def is_degenerate(self) -> bool:
        """True when every amplitude is zero (e.g. a dead ReLU channel)."""
        return bool(np.max(self.amplitudes, initial=0.0) == 0.0)


def amplitude_spectrum(signal, sampling_freq: float = 1.0) -> Spectrum:
    """One-sided amplitude spectrum ``|DFT(s)| / T`` of a real sequence.

    Parameters
    ----------
    signal : array_like
        Real sequence of length ``T >= 2`` with finite entries.
    sampling_freq : float
        Sampling frequency; only affects the physical frequency axis.

    Returns
    -------
    Spectrum
        ``(T - 1) // 2 + 1`` bins; the amplitude at bin ``k`` equals
        ``|sum_t s_t exp(-2j pi k t / T)| / T``.
    """
    s = _validate_signal(signal)
    t = s.shape[0]
    b = one_sided_bin_count(t)
    amps = np.abs(np.fft.rfft(s))[:b] / t
    return Spectrum(amplitudes=amps, sampling_freq=sampling_freq, source_length=t)


def peak_rms_ratio(spec: Spectrum) -> float:
    """Peak-to-RMS ratio of an amplitude spectrum.

    Measures how concentrated the spectrum is: a flat spectrum scores 1,
    a single occupied bin scores ``sqrt(bin_count)``.

    Raises
    ------
    DegenerateSpectrumError
        If every amplitude is zero (the ratio is a 0/0 form).
    """
    z = spec.amplitudes
    peak = float(z.max())
    if peak == 0.0:
        raise DegenerateSpectrumError("degenerate spectrum: all amplitudes are zero")
    scaled = z / peak  # ratio is scale-invariant; normalizing avoids under/overflow
    ssq = float(np.dot(scaled, scaled))
    return math.sqrt(spec.bin_count) / math.sqrt(ssq)


def focus_scale(ratios) -> float:
    """Population variance of per-channel peak-to-RMS ratios.

    Zero iff all ratios are equal; grows as the channels of a layer spread
    over a wider range of spectral concentration.
    """
    r = np.asarray(ratios, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] == 0:
        raise ValueError("ratios must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(r)):
        raise ValueError("ratios contain non-finite values")
    mean = r.mean()
    return float(np.mean((r - mean) ** 2))


def frequency_centroid(spec: Spectrum, units: str = "bins") -> float:
    """Amplitude-weighted mean frequency of a spectrum.

    Parameters
    ----------
    spec : Spectrum
    units : {"bins", "normalized", "hz"}
        ``bins`` returns the centroid in bin units; ``normalized`` divides
        by the highest bin index (range [0, 1], and 0.0 for a single-bin
        spectrum); ``hz`` converts to physical frequency.

    Raises
    ------
    DegenerateSpectrumError
        If every amplitude is zero.
    """
    z = spec.amplitudes
    total = float(z.sum())
    if float(z.max()) == 0.0:
        raise DegenerateSpectrumError("degenerate spectrum: all amplitudes are zero")
    centroid = float(np.dot(np.arange(spec.bin_count, dtype=np.float64), z)) / total
    if units == "bins":
        return centroid
    if units == "normalized":
        if spec.bin_count == 1:
            return 0.0
        return centroid / (spec.bin_count - 1)
    if units == "hz":
        return centroid * spec.sampling_freq / spec.source_length
    raise ValueError(f"unknown units {units!r}")


class BandMode(str, enum.Enum):
    """Which side of the frequency centroid a filter keeps."""

    KEEP_LFC = "keep_lfc"
    KEEP_HFC = "keep_hfc"
    RESTORE_LFC_FRACTION = "restore_lfc_fraction"


@dataclass(frozen=True)
class BandFilterSpec:
    """Centroid-split band filter parameters.

    ``centroid_bin`` must be ``floor(frequency_centroid(...))`` of the signal
    the filter is applied to; :meth:`for_signal` computes it. ``fraction`` is
    only used by :attr:`BandMode.RESTORE_LFC_FRACTION` and selects how much of
    the low band, working downward from the centroid, is added back.
    """

    mode: BandMode
    centroid_bin: int
    fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", BandMode(self.mode))
        if self.centroid_bin < 0:
            raise ValueError(f"centroid_bin must be >= 0, got {self.centroid_bin}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction}")

    @classmethod
    def for_signal(
        cls, signal, mode: BandMode, fraction: float = 0.0, sampling_freq: float = 1.0
    ) -> "BandFilterSpec":
        """Build a filter whose centroid bin comes from the signal's own spectrum."""
        spec = amplitude_spectrum(signal, sampling_freq)
        cb = int(math.floor(frequency_centroid(spec, units="bins")))
        return cls(mode=mode, centroid_bin=cb, fraction=fraction)


def band_filter(signal, filt: BandFilterSpec) -> np.ndarray:
    """Zero out one side of a signal's spectrum and inverse-transform.

    The full (two-sided) DFT bin ``k`` is classified by its one-sided index
    ``min(k, T - k)``: indices at or below ``filt.centroid_bin`` form the low
    band, everything above (including the Nyquist bin of even-length inputs)
    the high band. ``KEEP_LFC`` and ``KEEP_HFC`` therefore partition the
    signal exactly.

    ``RESTORE_LFC_FRACTION`` starts from the high band and adds back the
    contiguous bin range ``[ceil(centroid_bin * (1 - fraction)), centroid_bin]``;
    a fraction of 0 restores nothing and a fraction of 1 restores the whole
    low band.
    """
    s = _validate_signal(signal)
    t = s.shape[0]
    b = one_sided_bin_count(t)
    if filt.centroid_bin >= b:
        raise ValueError(
            f"centroid_bin {filt.centroid_bin} out of range for {b} spectrum bins"
        )
    k = np.arange(t)
    one_sided = np.minimum(k, t - k)
    low = one_sided <= filt.centroid_bin

    coeffs = np.fft.fft(s)
    if filt.mode is BandMode.KEEP_LFC:
        coeffs[~low] = 0.0
    elif filt.mode is BandMode.KEEP_HFC:
        coeffs[low] = 0.0
    else:
        kept = ~low
        if filt.fraction > 0.0:
            start = math.ceil(filt.centroid_bin * (1.0 - filt.fraction))
            kept = kept | ((one_sided >= start) & (one_sided <= filt.centroid_bin))
        coeffs[~kept] = 0.0
    return np.fft.ifft(coeffs).real


def filter_series(
    signal, mode: BandMode, fraction: float = 0.0, sampling_freq: float = 1.0
) -> np.ndarray:
    """Apply ``band_filter`` with the centroid taken from the signal itself."""
    filt = BandFilterSpec.for_signal(signal, mode, fraction, sampling_freq)
    return band_filter(signal, filt)
