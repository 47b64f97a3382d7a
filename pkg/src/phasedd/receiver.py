"""Three-branch phase-diverse direct-detection front end and SSBI-free field
reconstruction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optics import PdParams, make_rng, photodiode
from .signal import Waveform


@dataclass(frozen=True)
class ReceiverParams:
    """Phase shifts are in radians. The deviations model hardware error: the
    shifters apply ``theta + delta_theta + delta_theta_k`` while the
    reconstruction keeps using the nominal ``theta``."""

    theta: float = 2 * math.pi / 3
    delta_theta: float = 0.0
    delta_theta_1: float = 0.0
    delta_theta_2: float = 0.0
    carrier_filter_bw: float = 2e9
    split_loss: bool = True  # 1/sqrt(3) field per branch

    def __post_init__(self):
        if not 0 < self.theta < math.pi:
            raise ValueError(f"theta must lie in (0, pi), got {self.theta}")

    @property
    def applied_phases(self):
        t = self.theta + self.delta_theta
        return (t + self.delta_theta_1, 0.0, -(t + self.delta_theta_2))


@dataclass(frozen=True, eq=False)
class BranchCurrents:
    i1: Waveform
    i2: Waveform
    i3: Waveform

    def __post_init__(self):
        if not (len(self.i1) == len(self.i2) == len(self.i3)):
            raise ValueError("branch currents must have equal lengths")
        if len({self.i1.sample_rate, self.i2.sample_rate, self.i3.sample_rate}) != 1:
            raise ValueError("branch currents must share a sample rate")
        for w in (self.i1, self.i2, self.i3):
            if np.iscomplexobj(w.samples):
                raise ValueError("branch currents must be real")

    @property
    def sample_rate(self):
        return self.i1.sample_rate

    def arrays(self):
        return self.i1.samples, self.i2.samples, self.i3.samples

    def map(self, fn) -> "BranchCurrents":
        return BranchCurrents(fn(self.i1), fn(self.i2), fn(self.i3))

    def mean_removed(self) -> "BranchCurrents":
        return self.map(lambda w: w.replace(w.samples - w.samples.mean()))


def split_and_shift(e: Waveform, r: ReceiverParams, guard_band: float | None = None):
    """Split three ways and rotate only the narrow carrier region around DC."""
    if guard_band is not None and r.carrier_filter_bw > guard_band:
        raise ValueError(
            f"carrier filter {r.carrier_filter_bw:g} Hz exceeds guard band {guard_band:g} Hz"
        )
    X = np.fft.fft(e.samples)
    f = np.fft.fftfreq(len(e), 1 / e.sample_rate)
    mask = np.abs(f) <= r.carrier_filter_bw / 2
    scale = 1 / math.sqrt(3) if r.split_loss else 1.0
    out = []
    for ph in r.applied_phases:
        if ph == 0.0:
            out.append(e.replace(e.samples * scale))
            continue
        Y = X.copy()
        Y[mask] *= np.exp(1j * ph)
        out.append(e.replace(np.fft.ifft(Y) * scale))
    return tuple(out)


def detect_branches(s_o1: Waveform, s_o2: Waveform, s_o3: Waveform, pd: PdParams,
                    seed: int) -> BranchCurrents:
    """Three photodiodes with independent noise streams derived from ``seed``."""
    if not (len(s_o1) == len(s_o2) == len(s_o3)):
        raise ValueError("branch fields must have equal lengths")
    return BranchCurrents(*(
        photodiode(s, pd, seed, rng=make_rng(seed, 100 + k))
        for k, s in enumerate((s_o1, s_o2, s_o3))
    ))


def _check_theta(theta):
    if abs(math.sin(theta)) < 1e-9 or abs(math.cos(theta) - 1) < 1e-9:
        raise ValueError(
            f"theta={theta!r} makes the reconstruction singular (cos(theta)=1 or sin(theta)=0)"
        )


def combination_weights(c_amp: float, theta: float):
    """Real weights (w_i, w_q) with s_i = w_i . (i1, i2, i3) and s_q = w_q . (i1, i2, i3)."""
    _check_theta(theta)
    if not c_amp > 0:
        raise ValueError("c_amp must be positive")
    ki = 1 / (4 * c_amp * (math.cos(theta) - 1))
    kq = 1 / (4 * c_amp * math.sin(theta))
    return np.array([ki, -2 * ki, ki]), np.array([kq, 0.0, -kq])


def reconstruct(b: BranchCurrents, c_amp: float, theta: float) -> Waveform:
    """Field estimate from the three photocurrents.

    The |C|^2 and |s|^2 terms are common to all branches and cancel in both
    combinations.
    """
    wi, wq = combination_weights(c_amp, theta)
    i1, i2, i3 = b.arrays()
    s_i = wi[0] * i1 + wi[1] * i2 + wi[2] * i3
    s_q = wq[0] * i1 + wq[2] * i3
    return Waveform(s_i + 1j * s_q, b.sample_rate)


def noise_variances(c: float, delta: float, theta: float):
    """Per-rail variances of reconstructed thermal noise, (var_i, var_q)."""
    var_i = 3 * delta ** 2 / (8 * c ** 2 * (math.cos(theta) - 1) ** 2)
    var_q = delta ** 2 / (8 * c ** 2 * math.sin(theta) ** 2)
    return var_i, var_q


def theoretical_snr(p_s: float, c: float, delta: float, theta: float):
    """(SNR_i, SNR_q), linear, for signal power ``p_s`` and carrier amplitude ``c``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    snr_i = 4 * p_s * c ** 2 * (math.cos(theta) - 1) ** 2 / (3 * delta ** 2)
    snr_q = 4 * p_s * c ** 2 * math.sin(theta) ** 2 / delta ** 2
    return snr_i, snr_q


def balance_residual(theta):
    """3 sin^2(theta) - (cos(theta) - 1)^2; zero where SNR_i equals SNR_q."""
    theta = np.asarray(theta, dtype=float)
    return 3 * np.sin(theta) ** 2 - (np.cos(theta) - 1) ** 2


def optimal_theta() -> float:
    return 2 * math.pi / 3


def estimate_carrier_scale(b: BranchCurrents, preamble_ref, theta: float,
                           window: slice | None = None) -> float:
    """Least-squares real scale of the carrier amplitude from a known reference.

    ``preamble_ref`` is the expected field over ``window`` (time aligned with
    the currents). Currents are mean-removed first, so a common DC offset has
    no effect. The residual phase is left for the symbol-level rotation.
    """
    ref = np.asarray(preamble_ref)
    window = window if window is not None else slice(0, ref.size)
    e_ref = float(np.sum(np.abs(ref) ** 2))
    if e_ref <= 0:
        raise ValueError("reference has zero energy")
    s1 = reconstruct(b.mean_removed(), 1.0, theta).samples[window]
    if s1.size != ref.size:
        raise ValueError("reference and window lengths differ")
    # s1 = c * ref  =>  c = |<s1, ref>| / <ref, ref>
    return float(abs(np.vdot(ref, s1)) / e_ref)
