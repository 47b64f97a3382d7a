"""Link configuration: nested dataclasses with a JSON representation.

Every physical quantity carries its unit in the field name. The JSON file
holds the same nesting as :class:`LinkConfig`; any field may be omitted.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

SCHEMA_VERSION = 1


@dataclass
class LaserConfig:
    power_dbm: float = 16.0
    linewidth_hz: float = 100e3
    rin_dbc_hz: Optional[float] = -150.0


@dataclass
class ModulatorConfig:
    er_i_db: float = 7.0
    er_o_db: float = 25.0
    # explicit imbalance factors override the ER shorthand when set
    g_i: Optional[float] = None
    g_q: Optional[float] = None
    g_p: Optional[float] = None
    v_pi_v: float = 4.0
    v_bias_v: float = 4.0
    # AC drive without DPD: v = v_pi * drive_index * s
    drive_index: float = 0.45


@dataclass
class DpdConfig:
    enabled: bool = True
    alpha: float = 0.03
    # scale of the unit-RMS composite fed to the polynomial
    drive_scale: float = 0.12
    literal_offset: bool = True


@dataclass
class TxConfig:
    n_bands: int = 2
    symbol_rate_hz: float = 40e9
    guard_band_hz: float = 4e9
    rolloff: float = 0.01
    rrc_span_symbols: int = 128
    samples_per_symbol: int = 2
    payload_symbols: int = 2 ** 16
    preamble_symbols: int = 512
    clipping_ratio_db: float = 10.0
    dac_enob: float = 6.0
    response_bandwidth_hz: Optional[float] = 33.1e9
    response_order: int = 5
    pre_emphasis: bool = True
    max_boost_db: float = 40.0


@dataclass
class FiberConfig:
    length_km: float = 100.0
    attenuation_db_km: float = 0.2
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0


@dataclass
class ReceiverConfig:
    theta_deg: float = 120.0
    delta_theta_deg: float = 0.0
    delta_theta_1_deg: float = 0.0
    delta_theta_2_deg: float = 0.0
    carrier_filter_bw_hz: float = 2e9
    responsivity_a_w: float = 0.8
    dark_current_a: float = 5e-9
    thermal_psd_a_rthz: float = 10e-12
    adc_enob: Optional[float] = 6.0


@dataclass
class RxDspConfig:
    path: str = "analytic"  # analytic | lms
    lms_taps: int = 15
    lms_step: float = 1e-3
    lms_train_symbols: int = 8192
    lms_mode: str = "train-then-track"


@dataclass
class NoiseConfig:
    awgn_snr_db: Optional[float] = None
    awgn_location: str = "drive"  # drive | optical | off


@dataclass
class CoherentConfig:
    lo_power_dbm: float = 10.0


@dataclass
class LinkConfig:
    laser: LaserConfig = field(default_factory=LaserConfig)
    modulator: ModulatorConfig = field(default_factory=ModulatorConfig)
    dpd: DpdConfig = field(default_factory=DpdConfig)
    tx: TxConfig = field(default_factory=TxConfig)
    fiber: FiberConfig = field(default_factory=FiberConfig)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    rxdsp: RxDspConfig = field(default_factory=RxDspConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    coherent: CoherentConfig = field(default_factory=CoherentConfig)
    rop_dbm: float = -1.0
    sample_rate_hz: float = 160e9
    seed: int = 1
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LinkConfig":
        return _build(cls, d, "")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "LinkConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def digest(self) -> str:
        """Stable short hash of every field (reruns with equal digests are identical)."""
        blob = json.dumps(_canonical(self.to_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **dotted) -> "LinkConfig":
        """Copy with dotted-path overrides, e.g. ``replace(**{"dpd.alpha": 0.05})``."""
        d = self.to_dict()
        for key, value in dotted.items():
            set_dotted(d, key, value)
        return LinkConfig.from_dict(d)


def _canonical(x):
    if isinstance(x, float):
        # 4 and 4.0 must hash alike; JSON files may carry either
        if not math.isfinite(x):
            return repr(x)
        return int(x) if x.is_integer() else x
    if isinstance(x, dict):
        return {k: _canonical(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_canonical(v) for v in x]
    return x


def _build(cls, d, prefix):
    if not isinstance(d, dict):
        raise TypeError(f"{prefix or 'config'} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = set(d) - set(known)
    if unknown:
        raise KeyError(f"unknown config field(s): {', '.join(prefix + k for k in sorted(unknown))}")
    kwargs = {}
    for name, value in d.items():
        f = known[name]
        sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
        if sub is not None and dataclasses.is_dataclass(sub):
            kwargs[name] = _build(sub, value, prefix + name + ".")
        else:
            kwargs[name] = value
    if kwargs.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {kwargs['schema_version']}")
    return cls(**kwargs)


def parse_value(text: str):
    """Interpret a CLI override value as JSON when possible, else as a string."""
    low = text.strip().lower()
    if low in ("none", "null"):
        return None
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low == "-inf":
        return -math.inf
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    node = d
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise KeyError(f"unknown config section {key!r}")
        node = node[p]
    if parts[-1] not in node:
        raise KeyError(f"unknown config field {key!r}")
    old = node[parts[-1]]
    if isinstance(old, bool) and isinstance(value, str):
        value = value.lower() in ("1", "true", "yes", "on")
    elif isinstance(old, float) and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    node[parts[-1]] = value


def fast_profile(cfg: LinkConfig | None = None) -> LinkConfig:
    """Shorter frames (2**14 payload symbols per band) for tests and CI."""
    cfg = cfg or LinkConfig()
    return cfg.replace(**{"tx.payload_symbols": 2 ** 14})
