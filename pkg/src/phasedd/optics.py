"""Device and channel models: laser, finite-ER IQ modulator, fiber, VOA and
photodiode."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dpd import ImbalanceSet
from .signal import Waveform

log = logging.getLogger(__name__)

C_LIGHT = 299_792_458.0


def make_rng(seed, *stream) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``; same key, same stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def dbm_to_w(p_dbm: float) -> float:
    return 1e-3 * 10 ** (p_dbm / 10)


def w_to_dbm(p_w: float) -> float:
    return 10 * math.log10(p_w / 1e-3)


@dataclass(frozen=True)
class LaserParams:
    power_dbm: float = 16.0
    linewidth_hz: float = 100e3
    rin_dbc_hz: float | None = -150.0  # None disables RIN

    def __post_init__(self):
        if self.linewidth_hz < 0:
            raise ValueError("linewidth must be >= 0")
        if not math.isfinite(self.power_dbm):
            raise ValueError("laser power must be finite")


def laser_field(p: LaserParams, n: int, rate: float, seed: int, periodic: bool = False) -> Waveform:
    """CW field with Wiener phase noise and white relative intensity noise.

    With ``periodic`` the phase walk is tied down into a Brownian bridge
    (same increment statistics, no jump at the frame wrap), which keeps
    cyclic FFT processing free of leakage from the carrier.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = make_rng(seed, 0)
    amp = math.sqrt(dbm_to_w(p.power_dbm))
    if p.linewidth_hz > 0:
        dphi = rng.normal(0.0, math.sqrt(2 * math.pi * p.linewidth_hz / rate), n)
        dphi[0] = 0.0
        phase = np.cumsum(dphi)
        if periodic:
            # one more increment closes the loop; spread the closure error linearly
            wrap = phase[-1] + rng.normal(0.0, math.sqrt(2 * math.pi * p.linewidth_hz / rate))
            phase -= np.arange(n) * wrap / n
    else:
        phase = np.zeros(n)
    e = amp * np.exp(1j * phase)
    if p.rin_dbc_hz is not None:
        # relative intensity variance over the simulated (rate/2) bandwidth
        var_p = 10 ** (p.rin_dbc_hz / 10) * rate / 2
        m = rng.normal(0.0, math.sqrt(var_p) / 2, n)
        e = e * (1 + m)
    return Waveform(e, rate)


@dataclass(frozen=True)
class ModulatorParams:
    """Nested-MZI IQ modulator.

    ``v_bias_*`` is the DC added to the electrical drive by the bias tee; the
    default sits the child MZIs on a transmission null. The parent MZI is held
    at ``v_P`` (default ``v_pi_P / 2``, i.e. quadrature between I and Q).
    """

    g: ImbalanceSet = field(default_factory=ImbalanceSet)
    v_pi_I: float = 4.0
    v_pi_Q: float = 4.0
    v_pi_P: float = 4.0
    v_bias_I: float = 4.0
    v_bias_Q: float = 4.0
    v_P: float | None = None

    def __post_init__(self):
        if min(self.v_pi_I, self.v_pi_Q, self.v_pi_P) <= 0:
            raise ValueError("half-wave voltages must be positive")

    @property
    def parent_voltage(self) -> float:
        return self.v_pi_P / 2 if self.v_P is None else self.v_P


def _child_mzi(v, v_pi, g):
    phi = np.pi * np.asarray(v) / (2 * v_pi)
    return (math.sqrt(g / (1 + g)) * np.exp(1j * phi)
            + math.sqrt(1 / (1 + g)) * np.exp(-1j * phi))


def iq_transfer(v_I, v_Q, m: ModulatorParams) -> np.ndarray:
    """Field transfer of the modulator for total (bias-included) voltages.

    The two Y-junction pairs each contribute 1/sqrt(2) for balanced arms,
    hence the overall 1/2 that keeps the device passive.
    """
    g = m.g
    psi = np.pi * m.parent_voltage / (2 * m.v_pi_P)
    upper = math.sqrt(g.g_P / (1 + g.g_P)) * np.exp(-1j * psi) * _child_mzi(v_I, m.v_pi_I, g.g_I)
    lower = math.sqrt(1 / (1 + g.g_P)) * np.exp(1j * psi) * _child_mzi(v_Q, m.v_pi_Q, g.g_Q)
    return 0.5 * (upper + lower)


def iq_modulate(e_in: Waveform, v_I, v_Q, m: ModulatorParams) -> Waveform:
    """Modulate ``e_in`` with AC drives ``v_I``, ``v_Q`` (volts, bias added here)."""
    v_I = np.asarray(v_I, dtype=float)
    v_Q = np.asarray(v_Q, dtype=float)
    if not (v_I.size == v_Q.size == len(e_in)):
        raise ValueError(
            f"drive lengths ({v_I.size}, {v_Q.size}) do not match field length {len(e_in)}"
        )
    t = iq_transfer(v_I + m.v_bias_I, v_Q + m.v_bias_Q, m)
    return e_in.replace(e_in.samples * t)


def measure_cspr(e: Waveform, carrier_bw: float) -> float:
    """Carrier-to-signal power ratio in dB.

    Carrier is everything within +-carrier_bw/2 of DC; returns +inf when no
    power lies outside that window.
    """
    X = np.fft.fft(e.samples)
    f = np.fft.fftfreq(len(e), 1 / e.sample_rate)
    p = np.abs(X) ** 2
    inside = np.abs(f) <= carrier_bw / 2
    pc, ps = p[inside].sum(), p[~inside].sum()
    if ps <= 1e-30 * max(pc, 1e-300):
        log.warning("CSPR: no power outside the carrier window")
        return math.inf
    return 10 * math.log10(pc / ps)


@dataclass(frozen=True)
class FiberParams:
    length_km: float = 100.0
    attenuation_db_km: float = 0.2
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.length_km < 0 or self.attenuation_db_km < 0:
            raise ValueError("fiber length and attenuation must be >= 0")

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion in s^2/m."""
        lam = self.wavelength_nm * 1e-9
        return -self.dispersion_ps_nm_km * 1e-6 * lam ** 2 / (2 * np.pi * C_LIGHT)

    def cd_phase(self, f) -> np.ndarray:
        w = 2 * np.pi * np.asarray(f)
        return 0.5 * self.beta2 * w ** 2 * self.length_km * 1e3


def fiber_propagate(e: Waveform, f: FiberParams) -> Waveform:
    """Linear fiber: all-pass quadratic spectral phase then scalar loss."""
    if f.length_km == 0:
        return e
    freqs = np.fft.fftfreq(len(e), 1 / e.sample_rate)
    y = np.fft.ifft(np.fft.fft(e.samples) * np.exp(1j * f.cd_phase(freqs)))
    y *= 10 ** (-f.attenuation_db_km * f.length_km / 20)
    return e.replace(y)


def set_rop(e: Waveform, rop_dbm: float, warn: bool = True) -> Waveform:
    """Variable optical attenuator: scale so the mean power equals ``rop_dbm``.

    Gain is applied when the input is weaker than the target; it is logged
    as a warning unless ``warn`` is False (callers that track it themselves).
    """
    p = e.power
    if p <= 0:
        raise ValueError("cannot set ROP of a zero-power field")
    target = dbm_to_w(rop_dbm)
    if warn and target > p * (1 + 1e-12):
        log.warning("set_rop: target %.2f dBm exceeds input %.2f dBm (gain applied)",
                    rop_dbm, w_to_dbm(p))
    return e.replace(e.samples * math.sqrt(target / p))


@dataclass(frozen=True)
class PdParams:
    responsivity: float = 0.8
    dark_current: float = 5e-9
    thermal_psd: float = 10e-12  # A/sqrt(Hz)

    def __post_init__(self):
        if self.responsivity <= 0:
            raise ValueError("responsivity must be positive")
        if self.thermal_psd < 0:
            raise ValueError("thermal_psd must be >= 0")

    def noise_variance(self, rate: float) -> float:
        """Per-sample thermal variance over the simulated Nyquist band."""
        return self.thermal_psd ** 2 * rate / 2


def photodiode(e: Waveform, p: PdParams, seed, rng: np.random.Generator | None = None) -> Waveform:
    """Square-law detection plus dark current and white Gaussian thermal noise."""
    i = p.responsivity * np.abs(e.samples) ** 2 + p.dark_current
    sigma = math.sqrt(p.noise_variance(e.sample_rate))
    if sigma > 0:
        rng = rng if rng is not None else make_rng(seed)
        i = i + rng.normal(0.0, sigma, len(e))
    return Waveform(i, e.sample_rate)
