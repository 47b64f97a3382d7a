import os

import numpy as np
import pytest

from phasedd.config import LinkConfig, fast_profile


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-link runs that take more than a few seconds")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fast_cfg() -> LinkConfig:
    return fast_profile()


@pytest.fixture
def clean_cfg() -> LinkConfig:
    """Ideal modulator, no fiber, no noise sources, no converters."""
    return fast_profile().replace(**{
        "modulator.er_i_db": 1e9, "modulator.er_o_db": 1e9,
        "dpd.enabled": False,
        "laser.linewidth_hz": 0.0, "laser.rin_dbc_hz": None,
        "fiber.length_km": 0.0,
        "receiver.thermal_psd_a_rthz": 0.0, "receiver.dark_current_a": 0.0,
        "receiver.adc_enob": None,
        "tx.dac_enob": 0.0, "tx.clipping_ratio_db": None,
        "tx.response_bandwidth_hz": None,
    })
