"""Transmit-side DSP: 32-QAM mapping, framing, pulse shaping and
subcarrier multiplexing, and zero-forcing pre-emphasis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import RrcSpec, Waveform, frequency_shift, resample, rrc_taps

BITS_PER_SYMBOL = 5

_GRAY3 = {-7: 0b000, -5: 0b001, -3: 0b011, -1: 0b010, 1: 0b110, 3: 0b111, 5: 0b101, 7: 0b100}
_GRAY2 = {-3: 0b00, -1: 0b01, 1: 0b11, 3: 0b10}


def _cross32():
    """Cross 32-QAM on the odd-integer grid, labels from an 8x4 Gray rectangle.

    The eight |x| = 7 points of the rectangle fold onto the rows y = +-5,
    keeping one-bit labels between horizontal neighbours on the folded rows.
    """
    pts = np.empty(32, dtype=complex)
    for x, gx in _GRAY3.items():
        for y, gy in _GRAY2.items():
            label = (gx << 2) | gy
            if abs(x) == 7:
                x2, y2 = np.sign(x) * (3 if abs(y) == 3 else 1), np.sign(y) * 5
            else:
                x2, y2 = x, y
            pts[label] = x2 + 1j * y2
    return pts


_GRID = _cross32()
SCALE = np.sqrt(np.mean(np.abs(_GRID) ** 2))  # sqrt(20)
CONSTELLATION = _GRID / SCALE

# integer grid (x, y) in [-5, 5] -> label, -1 for points outside the cross
_LUT = -np.ones((11, 11), dtype=np.int64)
for _lab, _p in enumerate(_GRID):
    _LUT[int(_p.real) + 5, int(_p.imag) + 5] = _lab
_LABEL_BITS = ((np.arange(32)[:, None] >> np.arange(4, -1, -1)) & 1).astype(np.uint8)


def map_bits_to_qam(bits, order: int = 32) -> np.ndarray:
    """Map a 0/1 bit array onto unit-average-power cross 32-QAM symbols (MSB first)."""
    if order != 32:
        raise ValueError("only 32-QAM is supported")
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % BITS_PER_SYMBOL:
        raise ValueError(
            f"bit count {bits.size} is not a multiple of {BITS_PER_SYMBOL}"
        )
    labels = bits.reshape(-1, BITS_PER_SYMBOL) @ (1 << np.arange(4, -1, -1))
    return CONSTELLATION[labels]


def slice_labels(symbols) -> np.ndarray:
    """Minimum-distance decision on the cross grid, returning symbol labels."""
    z = np.asarray(symbols) * SCALE
    x = np.clip(2 * np.floor(z.real / 2) + 1, -5, 5)
    y = np.clip(2 * np.floor(z.imag / 2) + 1, -5, 5)
    corner = (np.abs(x) == 5) & (np.abs(y) == 5)
    if np.any(corner):
        # nearest valid neighbour of a missing corner is (5,3) or (3,5)
        xs_bigger = np.abs(z.real) > np.abs(z.imag)
        x = np.where(corner & ~xs_bigger, np.sign(x) * 3, x)
        y = np.where(corner & xs_bigger, np.sign(y) * 3, y)
    return _LUT[(x + 5).astype(int), (y + 5).astype(int)]


def demap_symbols(symbols) -> np.ndarray:
    """Hard-decision bits for received symbols."""
    return _LABEL_BITS[slice_labels(symbols)].ravel()


def decide(symbols) -> np.ndarray:
    return CONSTELLATION[slice_labels(symbols)]


@dataclass(frozen=True, eq=False)
class QamFrame:
    payload_symbols: np.ndarray
    preamble_symbols: np.ndarray
    payload_bits: np.ndarray
    bits_per_symbol: int = BITS_PER_SYMBOL

    @property
    def symbols(self) -> np.ndarray:
        return np.concatenate([self.preamble_symbols, self.payload_symbols])

    def __len__(self):
        return self.preamble_symbols.size + self.payload_symbols.size


def make_preamble(length: int = 512, seed: int = 0) -> np.ndarray:
    """Zadoff-Chu phase sequence quantized onto the four (+-3 +-3j) points.

    The root is drawn from ``seed`` so different bands can use different
    (low cross-correlation) preambles.
    """
    if length < 64:
        raise ValueError("preamble length must be >= 64")
    rng = np.random.default_rng(seed)
    while True:
        root = int(rng.integers(1, length))
        if np.gcd(root, length) == 1:
            break
    n = np.arange(length)
    if length % 2:
        phase = -np.pi * root * n * (n + 1) / length
    else:
        phase = -np.pi * root * n * n / length
    quad = np.round(np.mod(phase - np.pi / 4, 2 * np.pi) / (np.pi / 2)) % 4
    return 3 * np.sqrt(2) * np.exp(1j * (np.pi / 4 + quad * np.pi / 2)) / SCALE


def build_frame(bits, preamble_len: int = 512, seed: int = 0) -> QamFrame:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    payload = map_bits_to_qam(bits)
    return QamFrame(payload, make_preamble(preamble_len, seed), bits)


def random_frame(n_symbols: int, preamble_len: int, rng: np.random.Generator,
                 preamble_seed: int = 0) -> QamFrame:
    bits = rng.integers(0, 2, n_symbols * BITS_PER_SYMBOL, dtype=np.uint8)
    return build_frame(bits, preamble_len, preamble_seed)


@dataclass(frozen=True)
class SubcarrierPlan:
    n_bands: int = 2
    symbol_rate_per_band: float = 40e9
    guard_band: float = 4e9
    rolloff: float = 0.01

    def __post_init__(self):
        if self.n_bands < 1:
            raise ValueError("n_bands must be >= 1")

    @property
    def occupied(self) -> float:
        return self.symbol_rate_per_band * (1 + self.rolloff)

    def center_offsets(self) -> np.ndarray:
        spacing = self.occupied + self.guard_band
        return (np.arange(self.n_bands) - (self.n_bands - 1) / 2) * spacing

    def edge_frequency(self) -> float:
        return float(np.max(np.abs(self.center_offsets())) + self.occupied / 2)

    @property
    def line_rate(self) -> float:
        return self.n_bands * self.symbol_rate_per_band * BITS_PER_SYMBOL


def pulse_shape(symbols, rrc: RrcSpec, symbol_rate: float) -> Waveform:
    """Upsample to ``rrc.samples_per_symbol`` and RRC filter (cyclic frame).

    Symbol-instant samples of the matched-filter output reproduce the input
    symbols.
    """
    sps_ = rrc.samples_per_symbol
    up = np.zeros(len(symbols) * sps_, dtype=complex)
    up[::sps_] = symbols
    taps = rrc_taps(rrc) * np.sqrt(sps_)
    return Waveform(cyclic_filter(up, taps), symbol_rate * sps_)


def cyclic_filter(x, taps) -> np.ndarray:
    """Circular convolution with a centred kernel (frame treated as periodic)."""
    n = len(x)
    taps = np.asarray(taps)
    k = np.zeros(n, dtype=taps.dtype)
    half = taps.size // 2
    idx = (np.arange(taps.size) - half) % n
    np.add.at(k, idx, taps)
    y = np.fft.ifft(np.fft.fft(x) * np.fft.fft(k))
    if not (np.iscomplexobj(x) or np.iscomplexobj(taps)):
        y = y.real
    return y


def shape_and_mux(frames, plan: SubcarrierPlan, out_rate: float,
                  rrc: RrcSpec | None = None, normalize: bool = True) -> Waveform:
    """Shape each band, resample to ``out_rate``, shift to its slot and sum.

    Returns the composite normalized to unit RMS (when ``normalize``).
    """
    rrc = rrc or RrcSpec(rolloff=plan.rolloff)
    if len(frames) != plan.n_bands:
        raise ValueError(f"expected {plan.n_bands} frames, got {len(frames)}")
    if plan.edge_frequency() >= out_rate / 2:
        raise ValueError(
            f"out_rate {out_rate:g} Hz cannot hold band edge at {plan.edge_frequency():g} Hz"
        )
    total = None
    for frame, fc in zip(frames, plan.center_offsets()):
        band = pulse_shape(frame.symbols, rrc, plan.symbol_rate_per_band)
        band = frequency_shift(resample(band, out_rate), fc)
        total = band.samples if total is None else total + band.samples
    w = Waveform(total, out_rate)
    if normalize:
        w = w.replace(total / np.sqrt(w.power))
    return w


@dataclass(frozen=True)
class GaussianResponse:
    """Super-Gaussian low-pass magnitude response, -3 dB at ``bandwidth_hz``."""

    bandwidth_hz: float = 35e9
    order: int = 5

    def __call__(self, f):
        f = np.asarray(f, dtype=float)
        return np.exp(-0.5 * np.log(2) * np.abs(f / self.bandwidth_hz) ** (2 * self.order))


@dataclass(frozen=True)
class FlatResponse:
    def __call__(self, f):
        return np.ones_like(np.asarray(f, dtype=float))


def apply_response(w: Waveform, response) -> Waveform:
    f = np.fft.fftfreq(len(w), 1 / w.sample_rate)
    y = np.fft.ifft(np.fft.fft(w.samples) * response(f))
    return w.replace(y if np.iscomplexobj(w.samples) else y.real)


def pre_emphasis(w: Waveform, response, max_boost_db: float = 12.0,
                 band: float | None = None, floor: float = 1e-6) -> Waveform:
    """Zero-forcing inverse of ``response`` with the boost capped.

    Parameters
    ----------
    band : float, optional
        One-sided signal bandwidth (Hz) over which the response must stay
        above ``floor``. Defaults to the full Nyquist range.
    """
    f = np.fft.fftfreq(len(w), 1 / w.sample_rate)
    H = np.asarray(response(f), dtype=complex)
    inband = np.abs(f) <= (band if band is not None else w.sample_rate / 2)
    if np.any(np.abs(H[inband]) < floor):
        raise ValueError("response has an in-band null below the floor")
    cap = 10 ** (max_boost_db / 20)
    mag = np.minimum(1 / np.maximum(np.abs(H), 1 / cap), cap)
    G = mag * np.exp(-1j * np.angle(H))
    y = np.fft.ifft(np.fft.fft(w.samples) * G)
    return w.replace(y if np.iscomplexobj(w.samples) else y.real)
