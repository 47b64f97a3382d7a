import math

import numpy as np
import pytest

from phasedd.link import (StageError, band_limited_noise, modulator_of, plan_of, run_coherent_baseline,
                          run_link, transmit)
from phasedd.rxdsp import SNR_CAP_DB
from phasedd.txdsp import SubcarrierPlan


@pytest.fixture
def ideal_cfg(clean_cfg):
    return clean_cfg.replace(**{"modulator.er_i_db": math.inf, "modulator.er_o_db": math.inf,
                                "dpd.enabled": True})


def test_null_chain(ideal_cfg):
    r = run_link(ideal_cfg)
    assert r.ber == 0.0 and r.ber_censored
    assert r.evm < -35.0


def test_null_chain_lms(ideal_cfg):
    r = run_link(ideal_cfg.replace(**{"rxdsp.path": "lms"}))
    a = run_link(ideal_cfg)
    assert r.ber == 0.0
    assert abs(r.evm - a.evm) < 1.0


def test_report_fields(fast_cfg):
    r = run_link(fast_cfg)
    assert len(r.per_subcarrier_snr) == 2 and len(r.per_subcarrier_ber) == 2
    g = 10 * math.log10(math.sqrt((1 + 10 ** (r.per_subcarrier_snr[0] / 10))
                                  * (1 + 10 ** (r.per_subcarrier_snr[1] / 10))) - 1)
    assert r.global_snr == pytest.approx(g, abs=1e-9)
    assert 0 <= r.ber <= 1
    assert r.config_digest == fast_cfg.digest()
    assert r.line_rate == pytest.approx(400e9)


def test_deterministic(fast_cfg):
    a, b = run_link(fast_cfg), run_link(fast_cfg)
    assert a.as_row() == b.as_row()


def test_seed_changes_result(fast_cfg):
    assert run_link(fast_cfg).ber != run_link(fast_cfg.replace(seed=2)).ber


def test_band_limited_noise_power(rng):
    plan = SubcarrierPlan()
    x = band_limited_noise(1 << 14, 160e9, plan, 0.25, rng)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(0.25)
    f = np.fft.fftfreq(x.size, 1 / 160e9)
    X = np.abs(np.fft.fft(x)) ** 2
    assert X[np.abs(f) < 1.5e9].sum() / X.sum() < 1e-20


def test_er_shorthand_overrides():
    from phasedd.config import LinkConfig
    m = modulator_of(LinkConfig().replace(**{"modulator.g_p": 0.5}))
    assert m.g.g_P == 0.5 and m.g.g_I < 1


def test_unknown_rx_path(fast_cfg):
    with pytest.raises(StageError) as exc:
        run_link(fast_cfg.replace(**{"rxdsp.path": "magic"}))
    assert exc.value.stage == "rx-dsp"


def test_no_carrier_collapse(fast_cfg):
    # an uncorrected, ideal-extinction modulator leaves no carrier for the receiver
    with pytest.raises(StageError):
        run_link(fast_cfg.replace(**{"modulator.er_i_db": 40.0, "dpd.enabled": False}))


def test_tx_cspr_no_dpd(fast_cfg):
    tx = transmit(fast_cfg, use_dpd=False)
    assert tx.cspr_db == pytest.approx(-7.34, abs=1.5)


@pytest.mark.slow
def test_coherent_ideal_at_least_as_good(ideal_cfg):
    cfg = ideal_cfg.replace(**{"receiver.thermal_psd_a_rthz": 10e-12, "rop_dbm": -10.0})
    coh = run_coherent_baseline(cfg, use_dpd=True)
    pdd = run_link(cfg)
    assert coh.global_snr >= pdd.global_snr - 0.1


@pytest.mark.slow
def test_coherent_dpd_removes_floor(fast_cfg):
    cfg = fast_cfg.replace(**{"rop_dbm": 4.0, "noise.awgn_snr_db": 26.0})
    plain = run_coherent_baseline(cfg)
    fixed = run_coherent_baseline(cfg, use_dpd=True)
    assert plain.ber > 1e-2
    assert fixed.ber < plain.ber
