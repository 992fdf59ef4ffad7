"""Spectral transform, focus metrics, and band filtering."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqlens.spectral import (
    BandFilterSpec,
    BandMode,
    DegenerateSpectrumError,
    Spectrum,
    amplitude_spectrum,
    band_filter,
    filter_series,
    focus_scale,
    frequency_centroid,
    one_sided_bin_count,
    peak_rms_ratio,
)

from oracles import naive_dft_amplitudes, two_pass_variance, weighted_mean_bin


def make_spectrum(amps, length=None):
    amps = np.asarray(amps, dtype=np.float64)
    if length is None:
        length = 2 * len(amps)  # even length whose bin count matches len(amps)
    assert one_sided_bin_count(length) == len(amps)
    return Spectrum(amplitudes=amps, sampling_freq=1.0, source_length=length)


class TestAmplitudeSpectrum:
    def test_constant_signal_is_dc_only(self):
        for t_len in (2, 5, 16, 33):
            spec = amplitude_spectrum(np.full(t_len, 3.0))
            assert spec.amplitudes[0] == pytest.approx(3.0, abs=1e-12)
            assert np.all(np.abs(spec.amplitudes[1:]) < 1e-12)

    def test_single_tone(self):
        t_len, k0 = 64, 8
        t = np.arange(t_len)
        spec = amplitude_spectrum(np.cos(2 * np.pi * k0 * t / t_len))
        assert spec.amplitudes[k0] == pytest.approx(0.5, abs=1e-12)
        others = np.delete(spec.amplitudes, k0)
        assert np.all(np.abs(others) < 1e-12)

    def test_matches_naive_dft_oracle(self):
        rng = np.random.default_rng(7)
        signal = rng.normal(size=64)
        expected = naive_dft_amplitudes(signal)
        got = amplitude_spectrum(signal).amplitudes
        assert np.allclose(got, expected, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("t_len", [2, 3, 4, 5, 17, 32, 33, 128, 255, 512])
    def test_oracle_agreement_across_lengths(self, t_len):
        rng = np.random.default_rng(t_len)
        signal = rng.normal(size=t_len)
        assert np.allclose(
            amplitude_spectrum(signal).amplitudes,
            naive_dft_amplitudes(signal),
            rtol=1e-9,
            atol=1e-12,
        )

    def test_bin_count_and_frequencies(self):
        spec = amplitude_spectrum(np.arange(10.0), sampling_freq=100.0)
        assert spec.bin_count == (10 - 1) // 2 + 1 == 5
        assert np.allclose(spec.frequencies, np.arange(5) * 100.0 / 10)

    def test_rejects_short_and_nonfinite(self):
        with pytest.raises(ValueError):
            amplitude_spectrum([1.0])
        with pytest.raises(ValueError):
            amplitude_spectrum([1.0, np.nan, 2.0])
        with pytest.raises(ValueError):
            amplitude_spectrum([[1.0, 2.0], [3.0, 4.0]])


class TestPeakRmsRatio:
    def test_flat_spectrum_is_exactly_one(self):
        for amp in (1.0, 2.0, 0.5, 3.0):
            assert peak_rms_ratio(make_spectrum(np.full(16, amp))) == 1.0

    def test_single_bin_hits_sqrt_bins_exactly(self):
        amps = np.zeros(16)
        amps[5] = 2.0
        assert peak_rms_ratio(make_spectrum(amps)) == 4.0

    def test_matches_direct_arithmetic(self):
        rng = np.random.default_rng(3)
        amps = rng.uniform(0.1, 5.0, size=33)
        expected = max(amps) / math.sqrt(math.fsum(a * a for a in amps)) * math.sqrt(33)
        assert peak_rms_ratio(make_spectrum(amps)) == pytest.approx(expected, rel=1e-12)

    def test_degenerate_spectrum_raises(self):
        with pytest.raises(DegenerateSpectrumError, match="degenerate"):
            peak_rms_ratio(make_spectrum(np.zeros(8)))

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1e3), min_size=2, max_size=64).filter(
            lambda xs: max(xs) > 0
        )
    )
    def test_bounds(self, amps):
        p = peak_rms_ratio(make_spectrum(amps))
        b = len(amps)
        assert 1.0 - 1e-12 <= p <= math.sqrt(b) + 1e-12


class TestFocusScale:
    def test_identical_ratios_give_zero(self):
        assert focus_scale([2.5] * 10) == 0.0

    def test_two_point_case(self):
        assert focus_scale([1.0, 3.0]) == 1.0

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(11)
        ratios = rng.uniform(1.0, 4.0, size=64)
        assert focus_scale(ratios) == pytest.approx(two_pass_variance(ratios), abs=1e-12)

    def test_empty_input_raises(self):
        with pytest.raises(ValueError):
            focus_scale([])


class TestFrequencyCentroid:
    def test_pure_dc(self):
        amps = np.zeros(8)
        amps[0] = 2.0
        assert frequency_centroid(make_spectrum(amps)) == 0.0

    def test_flat_spectrum_centroid_is_half_range(self):
        for bins in (5, 8, 16, 33):
            spec = make_spectrum(np.ones(bins))
            assert frequency_centroid(spec) == (bins - 1) / 2

    def test_matches_weighted_mean_oracle(self):
        rng = np.random.default_rng(5)
        amps = rng.uniform(0.0, 2.0, size=40)
        amps[3] = 1.0
        spec = make_spectrum(amps)
        assert frequency_centroid(spec) == pytest.approx(weighted_mean_bin(amps), abs=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(9)
        amps = rng.uniform(0.0, 1.0, size=20)
        amps[1] = 0.5
        base = frequency_centroid(make_spectrum(amps))
        # power-of-two scaling commutes with rounding, so equality is exact
        for c in (2.0, 0.25, 1024.0):
            assert frequency_centroid(make_spectrum(c * amps)) == base
        for c in (math.pi, 3.7, 1e-3):
            assert frequency_centroid(make_spectrum(c * amps)) == pytest.approx(base, rel=1e-12)

    @given(st.data())
    @settings(max_examples=100)
    def test_strictly_increases_moving_amplitude_up(self, data):
        bins = data.draw(st.integers(min_value=3, max_value=24))
        amps = np.array(
            data.draw(
                st.lists(
                    st.floats(min_value=0.1, max_value=10.0), min_size=bins, max_size=bins
                )
            )
        )
        lo = data.draw(st.integers(min_value=0, max_value=bins - 2))
        hi = data.draw(st.integers(min_value=lo + 1, max_value=bins - 1))
        moved = amps.copy()
        shift = 0.5 * amps[lo]
        moved[lo] -= shift
        moved[hi] += shift
        assert frequency_centroid(make_spectrum(moved)) > frequency_centroid(make_spectrum(amps))

    def test_units(self):
        amps = np.zeros(9)
        amps[4] = 1.0
        spec = Spectrum(amplitudes=amps, sampling_freq=100.0, source_length=17)
        assert frequency_centroid(spec, units="bins") == 4.0
        assert frequency_centroid(spec, units="normalized") == 0.5
        assert frequency_centroid(spec, units="hz") == pytest.approx(4 * 100.0 / 17)
        with pytest.raises(ValueError):
            frequency_centroid(spec, units="octaves")

    def test_single_bin_normalized_is_zero(self):
        spec = amplitude_spectrum(np.array([1.0, 2.0]))  # T=2 -> one bin
        assert spec.bin_count == 1
        assert frequency_centroid(spec, units="normalized") == 0.0

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateSpectrumError, match="degenerate"):
            frequency_centroid(make_spectrum(np.zeros(6)))


class TestBandFilter:
    @pytest.mark.parametrize("t_len", [2, 3, 8, 17, 64, 129])
    def test_bands_partition_the_signal(self, t_len):
        rng = np.random.default_rng(t_len)
        x = rng.normal(size=t_len)
        low = filter_series(x, BandMode.KEEP_LFC)
        high = filter_series(x, BandMode.KEEP_HFC)
        assert np.allclose(low + high, x, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("t_len", [8, 33, 128])
    def test_band_energy_is_preserved(self, t_len):
        rng = np.random.default_rng(100 + t_len)
        x = rng.normal(size=t_len)
        low = filter_series(x, BandMode.KEEP_LFC)
        high = filter_series(x, BandMode.KEEP_HFC)
        total = float(np.sum(x**2))
        split = float(np.sum(low**2) + np.sum(high**2))
        assert split == pytest.approx(total, rel=1e-6)

    def test_full_restore_recovers_signal(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=96)
        restored = filter_series(x, BandMode.RESTORE_LFC_FRACTION, fraction=1.0)
        assert np.allclose(restored, x, rtol=1e-9, atol=1e-9)

    def test_zero_restore_equals_high_band_exactly(self):
        rng = np.random.default_rng(22)
        x = rng.normal(size=80)
        zero = filter_series(x, BandMode.RESTORE_LFC_FRACTION, fraction=0.0)
        high = filter_series(x, BandMode.KEEP_HFC)
        assert np.array_equal(zero, high)

    def test_restore_band_grows_downward_from_centroid(self):
        t_len = 64
        t = np.arange(t_len)
        # tones at bins 2 and 20 put the centroid between them
        x = np.cos(2 * np.pi * 2 * t / t_len) + np.cos(2 * np.pi * 20 * t / t_len)
        filt = BandFilterSpec.for_signal(x, BandMode.RESTORE_LFC_FRACTION, fraction=0.2)
        cb = filt.centroid_bin
        got = band_filter(x, filt)
        spec = amplitude_spectrum(got)
        start = math.ceil(cb * 0.8)
        kept = set(np.flatnonzero(spec.amplitudes > 1e-9))
        for b in kept:
            assert b > cb or start <= b <= cb

    def test_fraction_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            BandFilterSpec(BandMode.RESTORE_LFC_FRACTION, centroid_bin=3, fraction=1.5)
        with pytest.raises(ValueError):
            BandFilterSpec(BandMode.RESTORE_LFC_FRACTION, centroid_bin=3, fraction=-0.1)

    def test_centroid_bin_out_of_range_rejected(self):
        x = np.sin(np.linspace(0, 6.0, 16))
        with pytest.raises(ValueError):
            band_filter(x, BandFilterSpec(BandMode.KEEP_LFC, centroid_bin=900))

    @pytest.mark.parametrize("t_len", [2, 3, 7, 64, 1023, 4096])
    def test_fft_round_trip(self, t_len):
        rng = np.random.default_rng(t_len + 1)
        x = rng.normal(size=t_len)
        back = np.fft.ifft(np.fft.fft(x)).real
        assert np.allclose(back, x, rtol=1e-9, atol=1e-12)

    def test_output_is_real_valued(self):
        rng = np.random.default_rng(77)
        x = rng.normal(size=50)
        for mode in BandMode:
            got = filter_series(x, mode, fraction=0.5)
            assert got.dtype == np.float64
