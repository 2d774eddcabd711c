from __future__ import annotations

import json
import math

import numpy as np
import pytest
from conftest import SCENARIOS
from hypothesis import assume, given
from hypothesis import strategies as st
from oracles import fspl_physics_db

from uavfuzz.gps import (GPS_L1_MHZ, DomainError, SpoofScenario, evaluate, fspl_db, load_scenario,
                         received_power, received_power_array)

FAR = (620.0, 1500.0, 0.0)


def scenario(d: float, tx: float = 30.0, **kw) -> SpoofScenario:
    return SpoofScenario((0.0, 0.0, 0.0), (d, 0.0, 0.0), tx, FAR, **kw)


# -- received power ---------------------------------------------------------------------------

def test_doubling_distance_costs_6_02_db():
    a = received_power(30.0, 500.0)
    b = received_power(30.0, 1000.0)
    assert a - b == pytest.approx(20 * math.log10(2), abs=1e-9)
    assert a - b == pytest.approx(6.02, abs=0.005)


def test_620m_plug_in():
    # by hand: 20 log10(0.62) = -4.152, 20 log10(1575.42) = 63.948, + 32.44 -> 92.236 dB
    p = received_power(30.0, 620.0, GPS_L1_MHZ)
    assert p == pytest.approx(-62.24, abs=0.01)
    # the rounded 32.44 constant stays within 0.01 dB of the Friis form
    assert p == pytest.approx(30.0 - fspl_physics_db(620.0, GPS_L1_MHZ), abs=0.01)


@pytest.mark.parametrize("d", [0.0, -1.0, math.nan])
def test_nonpositive_distance_is_domain_error(d):
    with pytest.raises(DomainError):
        received_power(30.0, d)
    with pytest.raises(DomainError):
        received_power_array(30.0, [100.0, d])


def test_array_matches_scalar():
    d = np.geomspace(1.0, 1e6, 50)
    ref = [received_power(20.0, x) for x in d]
    assert np.allclose(received_power_array(20.0, d), ref)


@given(d=st.floats(1.0, 1e7), f=st.floats(1.0, 1e4))
def test_fspl_matches_friis(d, f):
    assert fspl_db(d, f) == pytest.approx(fspl_physics_db(d, f), abs=0.01)


# -- evaluate -----------------------------------------------------------------------------------

def test_equal_power_not_captured():
    d = 620.0
    s = scenario(d, authentic_power_dbm=received_power(30.0, d), margin_db=3.0)
    r = evaluate(s)
    assert not r.captured and r.reported_position == s.target_position


def test_620m_captured():
    s = scenario(620.0)
    r = evaluate(s)
    assert r.captured and r.reported_position == FAR
    assert "captured = true" in r.format()


def test_ten_times_farther_costs_20_db():
    near, far = evaluate(scenario(100.0)), evaluate(scenario(1000.0))
    assert near.spoofed_power_dbm - far.spoofed_power_dbm == pytest.approx(20.0, abs=1e-9)


def test_far_spoofer_flips_capture():
    assert evaluate(scenario(10.0, tx=-40.0)).captured  # -96.4 dBm
    assert not evaluate(scenario(1e5, tx=-40.0)).captured  # -176.4 dBm


def test_scenario_validation():
    with pytest.raises(DomainError):
        scenario(10.0, freq_mhz=0.0)
    with pytest.raises(DomainError):
        SpoofScenario((0, 0, 0), (1, 0, 0), 0.0, FAR, satellite_distances=(2e7, -1.0))
    with pytest.raises(ValueError):
        SpoofScenario((0, 0), (1, 0, 0), 0.0, FAR)
    with pytest.raises(DomainError):
        evaluate(SpoofScenario((5, 5, 5), (5, 5, 5), 0.0, FAR))


# -- scenario files ---------------------------------------------------------------------------

def test_load_620m_file():
    s = load_scenario(SCENARIOS / "620m.scn")
    assert s.name == "620m" and s.spoofer_distance == pytest.approx(620.0)
    assert evaluate(s).captured
    assert SpoofScenario.from_dict(s.to_dict()) == s


def test_unknown_field_rejected(tmp_path):
    d = scenario(10.0).to_dict()
    d["bogus"] = 1
    path = tmp_path / "bad.scn"
    path.write_text(json.dumps(d))
    with pytest.raises(ValueError, match="bogus"):
        load_scenario(path)


# -- invariants ---------------------------------------------------------------------------------

powers = st.floats(-60.0, 60.0)
dists = st.floats(1.0, 1e6)


@given(d=dists, tx1=powers, tx2=powers, auth=st.floats(-160, -100), margin=st.floats(0, 10))
def test_monotone_in_tx_power(d, tx1, tx2, auth, margin):
    lo, hi = sorted((tx1, tx2))
    a = evaluate(scenario(d, lo, authentic_power_dbm=auth, margin_db=margin)).captured
    b = evaluate(scenario(d, hi, authentic_power_dbm=auth, margin_db=margin)).captured
    assert b or not a


@given(d1=dists, d2=dists, tx=powers, auth=st.floats(-160, -100))
def test_monotone_in_distance(d1, d2, tx, auth):
    near, far = sorted((d1, d2))
    a = evaluate(scenario(near, tx, authentic_power_dbm=auth)).captured
    b = evaluate(scenario(far, tx, authentic_power_dbm=auth)).captured
    assert a or not b


@given(d=dists, tx=powers, auth=st.floats(-160, -100))
def test_position_integrity(d, tx, auth):
    s = scenario(d, tx, authentic_power_dbm=auth)
    r = evaluate(s)
    assert r.reported_position == (s.spoofed_position if r.captured else s.target_position)


def bisect_threshold(d: float, auth: float, margin: float) -> tuple[float, float]:
    """Narrow the tx power bracket where capture flips to 0.01 dB."""
    lo, hi = -200.0, 200.0
    while hi - lo > 0.01:
        mid = (lo + hi) / 2
        if evaluate(scenario(d, mid, authentic_power_dbm=auth, margin_db=margin)).captured:
            hi = mid
        else:
            lo = mid
    return lo, hi


@given(d=dists, auth=st.floats(-160, -100), margin=st.floats(0, 10))
def test_capture_flips_at_margin(d, auth, margin):
    lo, hi = bisect_threshold(d, auth, margin)
    assume(hi < 200.0)
    adv_lo = received_power(lo, d) - auth
    adv_hi = received_power(hi, d) - auth
    assert adv_lo <= margin < adv_hi
    assert adv_hi - adv_lo <= 0.01 + 1e-9
