import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasedd.signal import (RrcSpec, Waveform, clip, fir_filter, frequency_shift, quantize,
                            resample, rrc_taps)


def _bandlimited(rng, n, frac):
    X = np.fft.fft(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    f = np.fft.fftfreq(n)
    X[np.abs(f) > frac / 2] = 0
    return np.fft.ifft(X)


class TestWaveform:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Waveform(np.array([1.0, np.nan]), 1.0)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            Waveform(np.zeros(4), 0.0)

    def test_power_and_duration(self):
        w = Waveform(np.full(10, 2.0), 5.0)
        assert w.power == pytest.approx(4.0)
        assert w.duration == pytest.approx(2.0)


class TestRrc:
    def test_length_symmetry_energy(self):
        h = rrc_taps(RrcSpec(0.01, 32, 2))
        assert h.size == 65
        np.testing.assert_allclose(h, h[::-1], atol=1e-15)
        assert np.sum(h ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_cascade_isi_default_span(self):
        spec = RrcSpec()
        h = rrc_taps(spec)
        g = np.convolve(h, h)
        mid = g.size // 2
        sym = g[mid % spec.samples_per_symbol::spec.samples_per_symbol]
        main = np.max(np.abs(sym))
        isi = np.sort(np.abs(sym))[-2]
        assert 20 * np.log10(isi / main) < -40

    def test_rolloff_one_matches_textbook(self):
        spec = RrcSpec(1.0, 8, 4)
        h = rrc_taps(spec)
        t = (np.arange(h.size) - h.size // 2) / spec.samples_per_symbol
        ref = np.empty_like(t)
        for i, ti in enumerate(t):
            if ti == 0:
                ref[i] = 4 / np.pi
            elif abs(abs(ti) - 0.25) < 1e-12:
                ref[i] = (1 / np.sqrt(2)) * ((1 + 2 / np.pi) * np.sin(np.pi / 4)
                                             + (1 - 2 / np.pi) * np.cos(np.pi / 4))
            else:
                ref[i] = 4 * ti * np.cos(2 * np.pi * ti) / (np.pi * ti * (1 - 16 * ti ** 2))
        np.testing.assert_allclose(h, ref / np.linalg.norm(ref), atol=1e-12)

    @pytest.mark.parametrize("kw", [dict(rolloff=1.5), dict(span_symbols=2), dict(samples_per_symbol=1)])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            RrcSpec(**kw)


class TestFir:
    def test_identity(self, rng):
        w = Waveform(rng.standard_normal(50), 1.0)
        np.testing.assert_array_equal(fir_filter(w, [1.0]).samples, w.samples)

    def test_dc_gain(self):
        w = Waveform(np.full(20, 3.0), 1.0)
        np.testing.assert_allclose(fir_filter(w, [0.5, 0.5]).samples[1:-1], 3.0)

    def test_impulse_response(self):
        x = np.zeros(21)
        x[10] = 1.0
        taps = np.array([0.1, 0.2, 0.4, 0.2, 0.1])
        y = fir_filter(Waveform(x, 1.0), taps).samples
        np.testing.assert_allclose(y[8:13], taps)

    def test_allpass_preserves_power(self, rng):
        x = np.zeros(200)
        x[50:150] = rng.standard_normal(100)
        w = Waveform(x, 1.0)
        y = fir_filter(w, [0.0, 1.0, 0.0])
        assert y.power == pytest.approx(w.power, rel=1e-9)


class TestResample:
    def test_same_rate_identity(self, rng):
        w = Waveform(rng.standard_normal(16), 10.0)
        assert resample(w, 10.0) is w

    def test_round_trip(self, rng):
        w = Waveform(_bandlimited(rng, 4096, 0.7), 1.0)
        back = resample(resample(w, 2.0), 1.0)
        err = np.mean(np.abs(back.samples - w.samples) ** 2) / w.power
        assert 10 * np.log10(err) < -60

    def test_tone_frequency_and_amplitude(self):
        n, rate = 1000, 1000.0
        t = np.arange(n) / rate
        w = Waveform(np.exp(2j * np.pi * 100.0 * t), rate)
        up = resample(w, 2 * rate)
        X = np.fft.fft(up.samples) / len(up)
        f = np.fft.fftfreq(len(up), 1 / up.sample_rate)
        k = np.argmax(np.abs(X))
        assert f[k] == pytest.approx(100.0)
        assert abs(20 * np.log10(np.abs(X[k]))) < 0.1

    def test_real_input_stays_real(self, rng):
        w = Waveform(rng.standard_normal(64), 1.0)
        assert not np.iscomplexobj(resample(w, 2.0).samples)


class TestFrequencyShift:
    def test_zero_offset(self, rng):
        w = Waveform(rng.standard_normal(8) + 0j, 1.0)
        assert frequency_shift(w, 0.0) is w

    def test_inverse(self, rng):
        w = Waveform(rng.standard_normal(256) + 1j * rng.standard_normal(256), 1.0)
        back = frequency_shift(frequency_shift(w, 0.13), -0.13)
        np.testing.assert_allclose(back.samples, w.samples, atol=1e-12)

    def test_dc_moves_to_offset(self):
        w = Waveform(np.ones(128, dtype=complex), 128.0)
        y = frequency_shift(w, 16.0)
        f = np.fft.fftfreq(128, 1 / 128.0)
        assert f[np.argmax(np.abs(np.fft.fft(y.samples)))] == pytest.approx(16.0)

    def test_alias_rejected(self):
        with pytest.raises(ValueError):
            frequency_shift(Waveform(np.ones(4, complex), 1.0), 0.5)

    @given(st.floats(-0.49, 0.49))
    @settings(max_examples=50, deadline=None)
    def test_power_preserved(self, offset):
        x = np.random.default_rng(0).standard_normal(64) * (1 + 0j)
        w = Waveform(x, 1.0)
        assert frequency_shift(w, offset).power == pytest.approx(w.power, rel=1e-12)


class TestClipQuantize:
    def test_large_ratio_is_identity(self, rng):
        w = Waveform(rng.standard_normal(1000) + 1j * rng.standard_normal(1000), 1.0)
        np.testing.assert_array_equal(clip(w, 60.0).samples, w.samples)

    def test_clip_bounds(self, rng):
        x = rng.standard_normal(1000)
        rms = np.sqrt(np.mean(x ** 2))
        ratio = 20 * np.log10(0.5 * np.abs(x).max() / rms)
        y = clip(Waveform(x, 1.0), ratio).samples
        assert np.all(np.abs(y) <= 0.5 * np.abs(x).max() + 1e-12)

    def test_one_bit(self, rng):
        y = quantize(Waveform(rng.standard_normal(500) + 1j * rng.standard_normal(500), 1.0), 1)
        assert np.unique(y.samples.real).size == 2
        assert np.unique(y.samples.imag).size == 2

    def test_sine_sndr(self):
        n = 1 << 16
        x = np.sin(2 * np.pi * 1031 / n * np.arange(n))
        y = quantize(Waveform(x, 1.0), 6).samples
        sndr = 10 * np.log10(np.mean(x ** 2) / np.mean((y - x) ** 2))
        assert sndr == pytest.approx(6.02 * 6 + 1.76, abs=1.0)

    def test_enob_below_one_rejected(self):
        with pytest.raises(ValueError):
            quantize(Waveform(np.ones(4), 1.0), 0.5)

    @given(st.integers(2, 10))
    @settings(max_examples=20, deadline=None)
    def test_output_within_range(self, enob):
        x = np.random.default_rng(enob).standard_normal(300)
        y = quantize(Waveform(x, 1.0), enob).samples
        assert y.min() >= x.min() - 1e-12 and y.max() <= x.max() + 1e-12
        assert np.unique(y).size <= 2 ** enob
