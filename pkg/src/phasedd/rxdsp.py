"""Receiver DSP after field reconstruction: CD compensation, 3x1 LMS,
subcarrier demultiplexing, synchronization, phase correction, decisions and
metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .lms import lms_run
from .optics import FiberParams
from .receiver import BranchCurrents
from .signal import RrcSpec, Waveform, frequency_shift, resample
from .txdsp import BITS_PER_SYMBOL, QamFrame, SubcarrierPlan, cyclic_filter, demap_symbols, rrc_taps

log = logging.getLogger(__name__)

SNR_CAP_DB = 100.0


class SyncError(RuntimeError):
    pass


class LmsDivergence(RuntimeError):
    pass


def cd_compensate(s: Waveform, f: FiberParams, frequency_offset: float = 0.0) -> Waveform:
    """Undo the fiber's quadratic spectral phase.

    ``frequency_offset`` is the optical frequency (relative to the carrier)
    of the waveform's DC bin, for bands already shifted to baseband.
    """
    if f.length_km == 0:
        return s
    freqs = np.fft.fftfreq(len(s), 1 / s.sample_rate) + frequency_offset
    y = np.fft.ifft(np.fft.fft(s.samples) * np.exp(-1j * f.cd_phase(freqs)))
    return s.replace(y)


@dataclass(frozen=True)
class LmsConfig:
    taps_per_branch: int = 15
    step_size: float = 1e-3
    train_symbols: int = 8192
    mode: str = "train-then-track"

    def __post_init__(self):
        if self.taps_per_branch < 1 or self.taps_per_branch % 2 == 0:
            raise ValueError("taps_per_branch must be odd and >= 1")
        if not 0 < self.step_size < 1:
            raise ValueError("step_size must lie in (0, 1)")
        if self.mode not in ("train-then-track", "train-only"):
            raise ValueError(f"unknown LMS mode {self.mode!r}")


@dataclass(frozen=True, eq=False)
class LmsResult:
    output: Waveform
    taps: np.ndarray  # (branches, taps)
    training_mse: float
    error: np.ndarray


def lms_equalize_3x1(inputs, cfg: LmsConfig, reference, stride: int = 1, start: int = 0,
                     init=None, normalize: bool = True,
                     divergence_factor: float = 10.0) -> LmsResult:
    """Adaptive 3x1 combiner ``y[k] = sum_b sum_t conj(w[b,t]) x_b[start + k*stride + h - t]``.

    Parameters
    ----------
    inputs : BranchCurrents or sequence of three Waveforms
        Branch signals (mean-removed currents, or their demultiplexed bands).
    reference : array_like
        Desired output for the first ``cfg.train_symbols`` outputs.
    stride : int
        Input samples per output sample (2 for a T/2-spaced equalizer).
    init : array_like, optional
        Initial taps, shape (3, taps); zeros by default.
    normalize : bool
        Scale each branch to unit power so the step size is dimensionless.
        Returned taps refer to the unscaled inputs.

    Raises
    ------
    LmsDivergence
        If the training error grows by ``divergence_factor`` between the
        first and last tenth of the training window.
    """
    if isinstance(inputs, BranchCurrents):
        waves = [inputs.i1, inputs.i2, inputs.i3]
    else:
        waves = list(inputs)
    x = np.ascontiguousarray(np.stack([np.asarray(w.samples, dtype=complex) for w in waves]))
    if normalize:
        scale = np.sqrt(np.mean(np.abs(x) ** 2, axis=1))
        scale[scale == 0] = 1.0
    else:
        scale = np.ones(x.shape[0])
    x = np.ascontiguousarray(x / scale[:, None])
    ref = np.asarray(reference, dtype=complex)
    n_out = (x.shape[1] - start + stride - 1) // stride
    n_train = min(cfg.train_symbols, ref.size, n_out)
    d = np.zeros(n_out, dtype=complex)
    d[:n_train] = ref[:n_train]
    w = np.zeros((x.shape[0], cfg.taps_per_branch), dtype=complex)
    if init is not None:
        w[:] = np.asarray(init) * scale[:, None]
    y, err = lms_run(x, d, w, cfg.step_size, n_train, cfg.mode == "train-then-track",
                     start, stride, n_out)
    with np.errstate(over="ignore", invalid="ignore"):  # a diverged run is reported below
        tr = np.abs(err[:n_train]) ** 2
    mse = float(np.mean(tr[-max(1, n_train // 10):])) if n_train else float("nan")
    if n_train >= 20:
        first = np.mean(tr[: n_train // 10])
        if not np.isfinite(mse) or mse > divergence_factor * first:
            raise LmsDivergence(
                f"LMS training error rose from {first:.3g} to {mse:.3g} "
                f"(mu={cfg.step_size}, taps={cfg.taps_per_branch})"
            )
    if not np.all(np.isfinite(y)):
        raise LmsDivergence("LMS output is not finite")
    rate = waves[0].sample_rate / stride
    return LmsResult(Waveform(y, rate), w / scale[:, None], mse, err)


def demux_subcarrier(s: Waveform, plan: SubcarrierPlan, band_index: int,
                     samples_per_symbol: int = 2) -> Waveform:
    """Shift a band to DC, brick-wall it to its occupied width and resample."""
    if not 0 <= band_index < plan.n_bands:
        raise ValueError(f"band_index {band_index} outside 0..{plan.n_bands - 1}")
    fc = plan.center_offsets()[band_index]
    x = s.samples.astype(complex)
    y = frequency_shift(Waveform(x, s.sample_rate), -fc) if fc else Waveform(x, s.sample_rate)
    f = np.fft.fftfreq(len(y), 1 / y.sample_rate)
    Y = np.fft.fft(y.samples)
    Y[np.abs(f) > plan.occupied / 2] = 0
    y = y.replace(np.fft.ifft(Y))
    return resample(y, plan.symbol_rate_per_band * samples_per_symbol)


def matched_filter(s: Waveform, rrc: RrcSpec) -> Waveform:
    taps = rrc_taps(rrc) / np.sqrt(rrc.samples_per_symbol)
    return s.replace(cyclic_filter(s.samples, taps))


@dataclass(frozen=True, eq=False)
class SyncResult:
    aligned: Waveform
    offset: int
    peak_to_sidelobe_db: float


def synchronize(s: Waveform, preamble, samples_per_symbol: int = 2,
                min_psr_db: float = 6.0) -> SyncResult:
    """Locate the preamble by circular cross-correlation and align to it.

    The offset is the sample index at which the first preamble symbol sits;
    the returned waveform is rotated so that index becomes sample 0.
    """
    p = np.asarray(preamble)
    sps_ = samples_per_symbol
    n = len(s)
    tmpl = np.zeros(n, dtype=complex)
    tmpl[: p.size * sps_: sps_] = p
    corr = np.abs(np.fft.ifft(np.fft.fft(s.samples) * np.conj(np.fft.fft(tmpl))))
    k = int(np.argmax(corr))
    lag = (np.arange(n) - k + n // 2) % n - n // 2
    side = corr[np.abs(lag) > sps_]
    psr = 20 * math.log10(corr[k] / side.max()) if side.size and side.max() > 0 else math.inf
    if psr < min_psr_db:
        raise SyncError(f"preamble peak-to-sidelobe {psr:.1f} dB below {min_psr_db} dB")
    return SyncResult(s.replace(np.roll(s.samples, -k)), k, psr)


def constant_phase_rotate(symbols, reference, window: slice | None = None,
                          apply_gain: bool = True):
    """Remove one complex rotation (and optionally a real gain) estimated on ``window``.

    Returns ``(corrected, phase)`` with ``phase = arg sum(conj(ref) * rx)``.
    """
    rx = np.asarray(symbols)
    ref = np.asarray(reference)
    window = window if window is not None else slice(0, min(rx.size, ref.size))
    r, q = rx[window], ref[window]
    acc = np.vdot(q, r)
    if np.sum(np.abs(q) ** 2) == 0 or abs(acc) == 0:
        raise ValueError("zero-energy estimation window")
    phase = float(np.angle(acc))
    out = rx * np.exp(-1j * phase)
    if apply_gain:
        out = out * (np.sum(np.abs(q) ** 2) / abs(acc))
    return out, phase


@dataclass(frozen=True)
class Score:
    ber: float
    snr_db: float
    evm_db: float
    bit_errors: int
    n_bits: int

    @property
    def censored(self) -> bool:
        """True when too few errors were counted for a reliable BER."""
        return self.bit_errors < 5

    @property
    def snr_linear(self) -> float:
        return 10 ** (self.snr_db / 10)


def decide_and_score(symbols, frame: QamFrame) -> Score:
    """Hard decisions and data-aided SNR against the transmitted payload."""
    rx = np.asarray(symbols)
    ref = frame.payload_symbols
    if rx.size != ref.size:
        raise ValueError(f"got {rx.size} symbols for a {ref.size}-symbol payload")
    bits = demap_symbols(rx)
    errors = int(np.count_nonzero(bits != frame.payload_bits))
    err_p = float(np.mean(np.abs(rx - ref) ** 2))
    sig_p = float(np.mean(np.abs(ref) ** 2))
    snr_db = SNR_CAP_DB if err_p <= sig_p * 10 ** (-SNR_CAP_DB / 10) else 10 * math.log10(sig_p / err_p)
    return Score(errors / bits.size, snr_db, -snr_db, errors, bits.size)


def global_snr(snrs) -> float:
    """Aggregate linear SNR: prod(1 + SNR_n)**(1/N) - 1."""
    s = np.asarray(snrs, dtype=float)
    if s.size == 0:
        raise ValueError("need at least one SNR")
    if np.any(s < 0):
        raise ValueError("SNRs must be non-negative")
    if np.all(s == s[0]):
        return float(s[0])  # exact for equal inputs; the log form can round
    return float(np.expm1(np.mean(np.log1p(s))))


def db(x: float) -> float:
    return 10 * math.log10(x) if x > 0 else -math.inf


@dataclass
class MetricsReport:
    per_subcarrier_snr: list
    global_snr: float
    ber: float
    cspr: float
    evm: float
    samples_used: int
    config_digest: str
    per_subcarrier_ber: list = field(default_factory=list)
    ber_censored: bool = False
    line_rate: float = 0.0
    saturation_fraction: float = 0.0
    extra: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {
            "global_snr_db": self.global_snr,
            "ber": self.ber,
            "ber_censored": int(self.ber_censored),
            "cspr_db": self.cspr,
            "evm_db": self.evm,
            "samples_used": self.samples_used,
            "saturation_fraction": self.saturation_fraction,
        }
        for k, (s, b) in enumerate(zip(self.per_subcarrier_snr, self.per_subcarrier_ber)):
            row[f"snr_s{k + 1}_db"] = s
            row[f"ber_s{k + 1}"] = b
        row["config_digest"] = self.config_digest
        return row


def band_bits_per_payload(frame: QamFrame) -> int:
    return frame.payload_symbols.size * BITS_PER_SYMBOL
