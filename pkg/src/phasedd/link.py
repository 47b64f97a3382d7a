"""End-to-end link: Tx DSP, DPD, DAC, laser and modulator, fiber, VOA,
phase-diverse receiver and Rx DSP."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import dpd as dpd_mod
from .config import LinkConfig
from .optics import (FiberParams, LaserParams, ModulatorParams, PdParams, dbm_to_w,
                     fiber_propagate, iq_modulate, laser_field, make_rng, measure_cspr, set_rop,
                     w_to_dbm)
from .receiver import (BranchCurrents, ReceiverParams, combination_weights, detect_branches,
                       estimate_carrier_scale, reconstruct, split_and_shift)
from .rxdsp import (LmsConfig, MetricsReport, cd_compensate, constant_phase_rotate, db,
                    decide_and_score, demux_subcarrier, global_snr, lms_equalize_3x1,
                    matched_filter, synchronize)
from .signal import RrcSpec, Waveform, clip, quantize
from .txdsp import (GaussianResponse, SubcarrierPlan, apply_response, pre_emphasis, random_frame,
                    shape_and_mux)

log = logging.getLogger(__name__)

# random stream identifiers, combined with the master seed
_BITS, _AWGN, _LASER, _PD, _OPT_AWGN, _COH = 1, 2, 3, 4, 5, 6


class StageError(RuntimeError):
    def __init__(self, stage, digest, cause):
        super().__init__(f"stage {stage!r} failed (config {digest}): {cause}")
        self.stage = stage
        self.digest = digest


def _stage(name, digest):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, et, ev, tb):
            if ev is not None and not isinstance(ev, StageError):
                raise StageError(name, digest, ev) from ev
            return False
    return _Ctx()


def plan_of(cfg: LinkConfig) -> SubcarrierPlan:
    t = cfg.tx
    return SubcarrierPlan(t.n_bands, t.symbol_rate_hz, t.guard_band_hz, t.rolloff)


def rrc_of(cfg: LinkConfig) -> RrcSpec:
    return RrcSpec(cfg.tx.rolloff, cfg.tx.rrc_span_symbols, cfg.tx.samples_per_symbol)


def fiber_of(cfg: LinkConfig) -> FiberParams:
    f = cfg.fiber
    return FiberParams(f.length_km, f.attenuation_db_km, f.dispersion_ps_nm_km, f.wavelength_nm)


def modulator_of(cfg: LinkConfig) -> ModulatorParams:
    m = cfg.modulator
    base = dpd_mod.ImbalanceSet.from_er(m.er_i_db, m.er_o_db)
    g = dpd_mod.ImbalanceSet(
        m.g_i if m.g_i is not None else base.g_I,
        m.g_q if m.g_q is not None else base.g_Q,
        m.g_p if m.g_p is not None else base.g_P,
    )
    return ModulatorParams(g=g, v_pi_I=m.v_pi_v, v_pi_Q=m.v_pi_v, v_pi_P=m.v_pi_v,
                           v_bias_I=m.v_bias_v, v_bias_Q=m.v_bias_v)


def receiver_of(cfg: LinkConfig) -> ReceiverParams:
    r = cfg.receiver
    return ReceiverParams(math.radians(r.theta_deg), math.radians(r.delta_theta_deg),
                          math.radians(r.delta_theta_1_deg), math.radians(r.delta_theta_2_deg),
                          r.carrier_filter_bw_hz)


def pd_of(cfg: LinkConfig) -> PdParams:
    r = cfg.receiver
    return PdParams(r.responsivity_a_w, r.dark_current_a, r.thermal_psd_a_rthz)


@dataclass(eq=False)
class TxState:
    frames: list
    composite: Waveform       # clean unit-RMS multiplexed signal
    field: Waveform           # modulator output
    laser: Waveform
    saturation_fraction: float
    cspr_db: float


def band_limited_noise(n: int, rate: float, plan: SubcarrierPlan, power: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian noise confined to the occupied subcarrier bands.

    ``power`` is the mean power per sample, so the stated SNR is the
    in-band SNR seen by every subcarrier.
    """
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f = np.fft.fftfreq(n, 1 / rate)
    mask = np.zeros(n, dtype=bool)
    for fc in plan.center_offsets():
        mask |= np.abs(f - fc) <= plan.occupied / 2
    W = np.fft.fft(w) * mask
    x = np.fft.ifft(W)
    return x * math.sqrt(power / np.mean(np.abs(x) ** 2))


def drive_voltages(cfg: LinkConfig, s: np.ndarray, m: ModulatorParams, use_dpd: bool):
    """Electrical drive (AC, before the bias tee) for composite ``s``.

    Returns ``(v_I, v_Q, saturation_fraction)``.
    """
    if use_dpd:
        coeffs = dpd_mod.compute_dpd_coefficients(m.g)
        x = cfg.dpd.drive_scale * s
        # the arcsin inverse of the child-MZI cosine needs twice V_pi (phase per arm is pi*V/(2*V_pi))
        res = dpd_mod.predistort(x.real, x.imag, coeffs, 2 * m.v_pi_I, 2 * m.v_pi_Q,
                                 m.v_bias_I, m.v_bias_Q)
        v_I = dpd_mod.offset_correct(res.v_I, cfg.dpd.alpha, cfg.dpd.literal_offset)
        v_Q = dpd_mod.offset_correct(res.v_Q, cfg.dpd.alpha, cfg.dpd.literal_offset)
        return v_I, v_Q, res.saturation_fraction
    # plain null-biased drive: total voltage v_pi*(k*s - 1), field ~ sin(pi*k*s/2)
    k = cfg.modulator.drive_index
    v_I = m.v_pi_I * (k * s.real - 1) - m.v_bias_I
    v_Q = m.v_pi_Q * (k * s.imag - 1) - m.v_bias_Q
    sat = float(np.mean(np.abs(k * np.concatenate([s.real, s.imag])) > 1))
    return v_I, v_Q, sat


def dac(cfg: LinkConfig, v_I, v_Q, rate) -> tuple:
    """Pre-emphasis, clipping, quantization and Tx bandwidth on the AC part of the drive."""
    t = cfg.tx
    dc_I, dc_Q = float(np.mean(v_I)), float(np.mean(v_Q))
    ac = Waveform((v_I - dc_I) + 1j * (v_Q - dc_Q), rate)
    response = GaussianResponse(t.response_bandwidth_hz, t.response_order) \
        if t.response_bandwidth_hz else None
    if response is not None and t.pre_emphasis:
        ac = pre_emphasis(ac, response, t.max_boost_db, band=plan_of(cfg).edge_frequency())
    if t.clipping_ratio_db is not None:
        ac = clip(ac, t.clipping_ratio_db)
    if t.dac_enob:
        ac = quantize(ac, t.dac_enob)
    if response is not None:
        ac = apply_response(ac, response)
    return ac.samples.real + dc_I, ac.samples.imag + dc_Q


def transmit(cfg: LinkConfig, use_dpd: bool | None = None) -> TxState:
    """Bits to modulated optical field."""
    use_dpd = cfg.dpd.enabled if use_dpd is None else use_dpd
    plan, rrc, fs = plan_of(cfg), rrc_of(cfg), cfg.sample_rate_hz
    digest = cfg.digest()
    with _stage("tx-dsp", digest):
        frames = [random_frame(cfg.tx.payload_symbols, cfg.tx.preamble_symbols,
                               make_rng(cfg.seed, _BITS, b), preamble_seed=b)
                  for b in range(plan.n_bands)]
        composite = shape_and_mux(frames, plan, fs, rrc)
    s = composite.samples
    if cfg.noise.awgn_snr_db is not None and cfg.noise.awgn_location == "drive":
        s = s + band_limited_noise(s.size, fs, plan, 10 ** (-cfg.noise.awgn_snr_db / 10),
                                   make_rng(cfg.seed, _AWGN))
    m = modulator_of(cfg)
    with _stage("dpd", digest):
        v_I, v_Q, sat = drive_voltages(cfg, s, m, use_dpd)
    with _stage("dac", digest):
        v_I, v_Q = dac(cfg, v_I, v_Q, fs)
    with _stage("modulator", digest):
        lp = cfg.laser
        laser = laser_field(LaserParams(lp.power_dbm, lp.linewidth_hz, lp.rin_dbc_hz),
                            s.size, fs, seed=cfg.seed * 1000 + _LASER, periodic=True)
        e = iq_modulate(laser, v_I, v_Q, m)
        cspr = measure_cspr(e, cfg.receiver.carrier_filter_bw_hz)
    return TxState(frames, composite, e, laser, sat, cspr)


def channel(cfg: LinkConfig, e: Waveform) -> Waveform:
    e = fiber_propagate(e, fiber_of(cfg))
    gain_db = cfg.rop_dbm - w_to_dbm(e.power)
    if gain_db > 0:
        # ROP is the controlled variable; the absolute link budget is not modelled
        log.debug("VOA applies %.2f dB of gain", gain_db)
    e = set_rop(e, cfg.rop_dbm, warn=False)
    if cfg.noise.awgn_snr_db is not None and cfg.noise.awgn_location == "optical":
        rng = make_rng(cfg.seed, _OPT_AWGN)
        sigma = math.sqrt(e.power * 10 ** (-cfg.noise.awgn_snr_db / 10) / 2)
        e = e.replace(e.samples + sigma * (rng.standard_normal(len(e)) + 1j * rng.standard_normal(len(e))))
    return e


def adc(x: Waveform, enob) -> Waveform:
    return quantize(x, enob) if enob else x


def detect(cfg: LinkConfig, e: Waveform) -> BranchCurrents:
    """Phase-diverse front end, photodiodes and ADCs; returns mean-removed currents."""
    r = receiver_of(cfg)
    branches = split_and_shift(e, r, guard_band=cfg.tx.guard_band_hz)
    b = detect_branches(*branches, pd_of(cfg), seed=cfg.seed * 1000 + _PD)
    b = b.map(lambda w: adc(w, cfg.receiver.adc_enob))
    return b.mean_removed()


def _preamble_reference(cfg: LinkConfig, tx: TxState) -> tuple:
    """Expected received composite over the preamble window (dispersed, clean)."""
    ref = fiber_propagate(tx.composite, FiberParams(
        cfg.fiber.length_km, 0.0, cfg.fiber.dispersion_ps_nm_km, cfg.fiber.wavelength_nm))
    n = cfg.tx.preamble_symbols * int(round(cfg.sample_rate_hz / cfg.tx.symbol_rate_hz))
    return ref.samples[:n], slice(0, n)


def score_bands(cfg: LinkConfig, frames, band_symbols):
    """Rotate, decide and score each band's symbol stream."""
    scores = []
    for frame, y in zip(frames, band_symbols):
        ref = frame.symbols
        y, _ = constant_phase_rotate(y, ref)
        scores.append(decide_and_score(y[frame.preamble_symbols.size:], frame))
    return scores


def _band_symbols(cfg, field_est: Waveform, frames):
    plan, rrc = plan_of(cfg), rrc_of(cfg)
    sps_ = cfg.tx.samples_per_symbol
    out = []
    for k, frame in enumerate(frames):
        band = matched_filter(demux_subcarrier(field_est, plan, k, sps_), rrc)
        sync = synchronize(band, frame.preamble_symbols, sps_)
        out.append(sync.aligned.samples[::sps_][: len(frame)])
    return out


def _lms_band_symbols(cfg, b: BranchCurrents, frames, c_amp):
    """Per band: coarse CD removal, demux and matched filter on each current,
    then a T/2-spaced 3x1 LMS trained on the known frame."""
    plan, rrc, fiber = plan_of(cfg), rrc_of(cfg), fiber_of(cfg)
    sps_ = cfg.tx.samples_per_symbol
    theta = math.radians(cfg.receiver.theta_deg)
    lcfg = LmsConfig(cfg.rxdsp.lms_taps, cfg.rxdsp.lms_step, cfg.rxdsp.lms_train_symbols,
                     cfg.rxdsp.lms_mode)
    currents = [cd_compensate(Waveform(w.samples.astype(complex), w.sample_rate), fiber)
                for w in (b.i1, b.i2, b.i3)]
    wi, wq = combination_weights(c_amp, theta)
    out = []
    for k, frame in enumerate(frames):
        bands = [matched_filter(demux_subcarrier(c, plan, k, sps_), rrc) for c in currents]
        nominal = sum((wi[j] + 1j * wq[j]) * bands[j].samples for j in range(3))
        sync = synchronize(Waveform(nominal, bands[0].sample_rate), frame.preamble_symbols, sps_)
        # start from the nominal combination, gain and phase fitted on the preamble
        pre = frame.preamble_symbols
        y0 = sync.aligned.samples[: pre.size * sps_: sps_]
        h = np.vdot(y0, pre) / np.vdot(y0, y0)
        init = np.zeros((3, lcfg.taps_per_branch), dtype=complex)
        init[:, lcfg.taps_per_branch // 2] = np.conj(h * (wi + 1j * wq))
        res = lms_equalize_3x1([w.replace(np.roll(w.samples, -sync.offset)) for w in bands],
                               lcfg, frame.symbols, stride=sps_, init=init)
        out.append(res.output.samples[: len(frame)])
    return out


def _report(cfg, tx: TxState, scores, samples_used) -> MetricsReport:
    snrs = [s.snr_db for s in scores]
    g = global_snr([10 ** (x / 10) for x in snrs])
    errors = sum(s.bit_errors for s in scores)
    bits = sum(s.n_bits for s in scores)
    return MetricsReport(
        per_subcarrier_snr=snrs,
        global_snr=db(g),
        ber=errors / bits,
        cspr=tx.cspr_db,
        evm=-db(g),
        samples_used=samples_used,
        config_digest=cfg.digest(),
        per_subcarrier_ber=[s.ber for s in scores],
        ber_censored=errors < 5,
        line_rate=plan_of(cfg).line_rate,
        saturation_fraction=tx.saturation_fraction,
    )


def run_link(cfg: LinkConfig, tx: TxState | None = None) -> MetricsReport:
    """Full proposed link; deterministic for a given config (seed included)."""
    digest = cfg.digest()
    tx = tx or transmit(cfg)
    with _stage("channel", digest):
        e = channel(cfg, tx.field)
    with _stage("receiver", digest):
        b = detect(cfg, e)
        theta = math.radians(cfg.receiver.theta_deg)
        ref, win = _preamble_reference(cfg, tx)
        c_amp = estimate_carrier_scale(b, ref, theta, win)
    with _stage("rx-dsp", digest):
        if cfg.rxdsp.path == "analytic":
            s_hat = cd_compensate(reconstruct(b, c_amp, theta), fiber_of(cfg))
            bands = _band_symbols(cfg, s_hat, tx.frames)
        elif cfg.rxdsp.path == "lms":
            bands = _lms_band_symbols(cfg, b, tx.frames, c_amp)
        else:
            raise ValueError(f"unknown rx path {cfg.rxdsp.path!r}")
        scores = score_bands(cfg, tx.frames, bands)
    return _report(cfg, tx, scores, len(e))


def run_coherent_baseline(cfg: LinkConfig, use_dpd: bool = False,
                          tx: TxState | None = None) -> MetricsReport:
    """Same transmitter and fiber, received by an ideal homodyne front end.

    The local oscillator is phase-locked to the transmit laser; each output
    rail carries thermal noise of variance delta^2 / 2.
    """
    digest = cfg.digest()
    tx = tx or transmit(cfg, use_dpd=use_dpd)
    with _stage("channel", digest):
        e = channel(cfg, tx.field)
    with _stage("coherent-receiver", digest):
        pd = pd_of(cfg)
        lo = math.sqrt(dbm_to_w(cfg.coherent.lo_power_dbm))
        y = pd.responsivity * lo * e.samples * np.exp(-1j * np.angle(tx.laser.samples))
        sigma = math.sqrt(pd.noise_variance(e.sample_rate) / 2)
        if sigma > 0:
            rng = make_rng(cfg.seed, _COH)
            y = y + sigma * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
        y = adc(Waveform(y, e.sample_rate), cfg.receiver.adc_enob)
    with _stage("rx-dsp", digest):
        y = cd_compensate(y, fiber_of(cfg))
        scores = score_bands(cfg, tx.frames, _band_symbols(cfg, y, tx.frames))
    return _report(cfg, tx, scores, len(e))
