import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from phasedd.config import LinkConfig, fast_profile, parse_value, set_dotted


def test_defaults_round_trip(tmp_path):
    cfg = LinkConfig()
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    back = LinkConfig.load(p)
    assert back == cfg
    assert back.digest() == cfg.digest()


def test_partial_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"dpd": {"alpha": 0.05}, "rop_dbm": -3}))
    cfg = LinkConfig.load(p)
    assert cfg.dpd.alpha == 0.05 and cfg.rop_dbm == -3
    assert cfg.tx == LinkConfig().tx


def test_unknown_field_rejected():
    with pytest.raises(KeyError, match="dpd.beta"):
        LinkConfig.from_dict({"dpd": {"beta": 1}})


def test_schema_version():
    with pytest.raises(ValueError):
        LinkConfig.from_dict({"schema_version": 99})


def test_section_must_be_mapping():
    with pytest.raises(TypeError):
        LinkConfig.from_dict({"dpd": 3})


def test_dotted_override():
    cfg = LinkConfig().replace(**{"dpd.alpha": 0.07, "receiver.theta_deg": 110})
    assert cfg.dpd.alpha == 0.07
    assert isinstance(cfg.receiver.theta_deg, float)
    with pytest.raises(KeyError):
        LinkConfig().replace(**{"nope.x": 1})
    with pytest.raises(KeyError):
        LinkConfig().replace(**{"dpd.nope": 1})


def test_bool_from_string():
    d = LinkConfig().to_dict()
    set_dotted(d, "dpd.enabled", "false")
    assert d["dpd"]["enabled"] is False


def test_parse_value():
    assert parse_value("3") == 3
    assert parse_value("0.5") == 0.5
    assert parse_value("null") is None and parse_value("None") is None
    assert parse_value("inf") == math.inf and parse_value("-inf") == -math.inf
    assert parse_value("lms") == "lms"
    assert parse_value("true") is True


def test_fast_profile():
    assert fast_profile().tx.payload_symbols == 2 ** 14
    assert fast_profile().replace(**{"tx.payload_symbols": 2 ** 16}) == LinkConfig()


def test_digest_int_float_alias():
    a = LinkConfig().replace(**{"rop_dbm": -3})
    b = LinkConfig().replace(**{"rop_dbm": -3.0})
    assert a.digest() == b.digest()


def test_digest_handles_inf():
    assert LinkConfig().replace(**{"modulator.er_i_db": math.inf}).digest()


FIELDS = [("dpd.alpha", 0.031), ("rop_dbm", -1.5), ("seed", 2), ("tx.clipping_ratio_db", 9.0),
          ("receiver.theta_deg", 119.0), ("rxdsp.path", "lms"), ("noise.awgn_snr_db", 26.0),
          ("modulator.g_i", 0.5), ("laser.rin_dbc_hz", None)]


@given(st.sampled_from(FIELDS))
@settings(max_examples=30, deadline=None)
def test_digest_changes_with_any_field(item):
    key, value = item
    assert LinkConfig().replace(**{key: value}).digest() != LinkConfig().digest()


def test_digest_stable():
    assert LinkConfig().digest() == LinkConfig().digest()
    assert len(LinkConfig().digest()) == 16
