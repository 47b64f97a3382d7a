"""Sample-level primitives shared by every stage of the link.

All functions are pure: they take a :class:`Waveform` and return a new one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled complex (or real) baseband sequence.

    Parameters
    ----------
    samples : np.ndarray
        One-dimensional sample array. Units depend on the stage (volts,
        sqrt(W) optical field, amperes).
    sample_rate : float
        Sampling rate in Hz.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples)
        if x.ndim != 1:
            raise ValueError("Waveform samples must be one-dimensional")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise ValueError("Waveform contains non-finite samples")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    def replace(self, samples) -> "Waveform":
        return Waveform(samples, self.sample_rate)

    @property
    def power(self) -> float:
        """Mean |x|^2."""
        return float(np.mean(np.abs(self.samples) ** 2))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class RrcSpec:
    rolloff: float = 0.01
    span_symbols: int = 128
    samples_per_symbol: int = 2

    def __post_init__(self):
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if self.span_symbols < 4:
            raise ValueError("span_symbols must be >= 4")
        if self.samples_per_symbol < 2:
            raise ValueError("samples_per_symbol must be >= 2")


def rrc_taps(spec: RrcSpec) -> np.ndarray:
    """Root-raised-cosine impulse response normalized to unit energy.

    The response has ``span_symbols * samples_per_symbol + 1`` taps and is
    centred on the middle tap.
    """
    beta = spec.rolloff
    n = spec.span_symbols * spec.samples_per_symbol
    t = (np.arange(n + 1) - n / 2) / spec.samples_per_symbol
    h = np.empty_like(t)

    at_zero = np.isclose(t, 0.0, atol=1e-12)
    if beta > 0:
        at_sing = np.isclose(np.abs(t), 1 / (4 * beta), atol=1e-12)
    else:
        at_sing = np.zeros_like(at_zero)
    regular = ~(at_zero | at_sing)

    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    den = np.pi * tr * (1 - (4 * beta * tr) ** 2)
    h[regular] = num / den
    h[at_zero] = 1 - beta + 4 * beta / np.pi
    if np.any(at_sing):
        h[at_sing] = beta / np.sqrt(2) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
        )
    return h / np.linalg.norm(h)


def fir_filter(w: Waveform, taps) -> Waveform:
    """Zero-padded linear convolution with the group delay removed.

    The output keeps the input length; sample ``k`` of the output lines up
    with sample ``k`` of the input for linear-phase (symmetric) taps.
    """
    taps = np.asarray(taps)
    if taps.size == 0:
        raise ValueError("taps must be non-empty")
    y = sps.oaconvolve(w.samples, taps) if taps.size > 64 else np.convolve(w.samples, taps)
    d = taps.size // 2
    return w.replace(y[d:d + len(w)])


def resample(w: Waveform, new_rate: float) -> Waveform:
    """Band-limited (FFT domain) rate conversion.

    The waveform is treated as one period of a periodic signal, which is how
    the link simulator frames its data.
    """
    if not new_rate > 0:
        raise ValueError(f"new_rate must be positive, got {new_rate}")
    if new_rate == w.sample_rate:
        return w
    n_out = int(round(len(w) * new_rate / w.sample_rate))
    if n_out < 1:
        raise ValueError("resampled waveform would be empty")
    x = w.samples
    y = sps.resample(x, n_out)
    if not np.iscomplexobj(x):
        y = np.real(y)
    return Waveform(y, new_rate)


def frequency_shift(w: Waveform, offset: float) -> Waveform:
    """Multiply by exp(j*2*pi*offset*t), t = n / sample_rate."""
    if abs(offset) >= w.sample_rate / 2:
        raise ValueError(
            f"offset {offset:g} Hz aliases at sample rate {w.sample_rate:g} Hz"
        )
    if offset == 0:
        return w
    n = np.arange(len(w))
    return w.replace(w.samples * np.exp(2j * np.pi * offset / w.sample_rate * n))


def _rails(x):
    if np.iscomplexobj(x):
        return [x.real, x.imag]
    return [x]


def _join(rails):
    if len(rails) == 2:
        return rails[0] + 1j * rails[1]
    return rails[0]


def clip(w: Waveform, clipping_ratio_db: float) -> Waveform:
    """Saturate each rail at ``rms(rail) * 10**(clipping_ratio_db / 20)``."""
    if not np.isfinite(clipping_ratio_db):
        raise ValueError("clipping_ratio_db must be finite")
    out = []
    for r in _rails(w.samples):
        level = np.sqrt(np.mean(r ** 2)) * 10 ** (clipping_ratio_db / 20)
        out.append(np.clip(r, -level, level))
    return w.replace(_join(out))


def clip_to_level(w: Waveform, level: float) -> Waveform:
    """Saturate both rails at an absolute level."""
    return w.replace(_join([np.clip(r, -level, level) for r in _rails(w.samples)]))


def quantizer_range(w: Waveform):
    """Per-rail (min, max) pairs, the frozen full scale used by :func:`quantize`."""
    return [(float(r.min()), float(r.max())) for r in _rails(w.samples)]


def quantize(w: Waveform, enob: float, full_scale=None) -> Waveform:
    """Uniform mid-rise quantizer with ``2**enob`` levels per rail.

    Parameters
    ----------
    w : Waveform
    enob : float
        Effective number of bits; non-integer values give a non-integer
        number of steps across the range.
    full_scale : list of (lo, hi), optional
        Frozen per-rail range. Defaults to the per-rail min/max of ``w``.
    """
    if enob < 1:
        raise ValueError(f"enob must be >= 1, got {enob}")
    rails = _rails(w.samples)
    if full_scale is None:
        full_scale = quantizer_range(w)
    levels = 2.0 ** enob
    out = []
    for r, (lo, hi) in zip(rails, full_scale):
        span = hi - lo
        if span <= 0:
            out.append(r.copy())
            continue
        step = span / levels
        idx = np.floor((r - lo) / step)
        idx = np.clip(idx, 0, np.ceil(levels) - 1)
        out.append(np.minimum(lo + (idx + 0.5) * step, hi))
    return w.replace(_join(out))


def spectrum_power(w: Waveform, nfft=None):
    """Two-sided periodogram: returns (frequency Hz, power per bin), fft-shifted."""
    n = nfft or len(w)
    X = np.fft.fft(w.samples, n)
    p = np.abs(X) ** 2 / (n * len(w))
    f = np.fft.fftfreq(n, 1 / w.sample_rate)
    return np.fft.fftshift(f), np.fft.fftshift(p)


def next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()
