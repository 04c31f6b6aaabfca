import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from judrs.core_model import DomainError, SystemParams, pathloss_gain
from judrs.link_budget import (ber_mqam, coded_power, constellation_size, df_end_to_end_ber,
                               per_hop_ber_target, rate_factor_f, required_power_uncoded,
                               required_snr)

# frozen from tests/oracles.py
BER_100_16 = 9.0799859524969703071e-6
SNR_1E4_64 = 319.23790330076745918
UNCODED_1E4_64_H250 = 0.016056148917292320313
CODED_6_H250 = 0.029419174284662662534
F_6 = 9.1259105650076852389e-13

REL = 1e-12


def test_ber_trivial():
    assert ber_mqam(0.0, 4) == 0.2
    m = 16.0
    assert ber_mqam(2 * (m - 1) / 1.5, m) == pytest.approx(0.2 * math.exp(-2), rel=1e-15)


def test_ber_oracle():
    assert ber_mqam(100.0, 16) == pytest.approx(BER_100_16, rel=REL)


def test_ber_domain():
    with pytest.raises(DomainError):
        ber_mqam(1.0, 1.0)
    with pytest.raises(DomainError):
        ber_mqam(-1.0, 4)


def test_required_snr():
    assert required_snr(0.2, 16) == 0.0
    assert ber_mqam(required_snr(1e-4, 16), 16) == pytest.approx(1e-4, rel=REL)
    assert required_snr(1e-4, 64) == pytest.approx(SNR_1E4_64, rel=REL)
    for bad in (0.0, 0.3, -1e-3):
        with pytest.raises(DomainError):
            required_snr(bad, 16)


@given(pe=st.floats(1e-12, 0.2), m=st.floats(1.5, 4096.0))
def test_snr_round_trip_property(pe, m):
    assert ber_mqam(required_snr(pe, m), m) == pytest.approx(pe, rel=1e-10)


def test_uncoded_power(params):
    h250 = pathloss_gain(250.0, params)
    assert required_power_uncoded(0.2, 16, 1e-10, params) == 0.0
    assert required_power_uncoded(1e-4, 64, h250, params) == pytest.approx(UNCODED_1E4_64_H250, rel=REL)
    rng = np.random.default_rng(0)
    for _ in range(20):
        pe, m, h = 10 ** rng.uniform(-8, -1), rng.uniform(2, 1024), 10 ** rng.uniform(-14, -8)
        expect = required_snr(pe, m) * params.noise_power / h
        assert required_power_uncoded(pe, m, h, params) == pytest.approx(expect, rel=REL)
    with pytest.raises(DomainError):
        required_power_uncoded(1e-4, 16, 0.0, params)


def test_coded_power(params):
    h250 = pathloss_gain(250.0, params)
    assert coded_power(3.0, 0.2, h250, params) == 0.0
    assert coded_power(6.0, 1e-4, h250, params) == pytest.approx(CODED_6_H250, rel=REL)
    rng = np.random.default_rng(1)
    eta, gc = params.code_rate_etac, params.coding_gain_gc
    for _ in range(20):
        r, pe, h = rng.uniform(0.5, 8), 10 ** rng.uniform(-8, -1), 10 ** rng.uniform(-14, -8)
        m = 2 ** (r / eta)
        expect = required_power_uncoded(pe, m, h, params) * eta / gc
        assert coded_power(r, pe, h, params) == pytest.approx(expect, rel=REL)


def test_df_ber():
    assert df_end_to_end_ber(0.0, 0.0) == 0.0
    for x in (1e-4, 0.1):
        assert df_end_to_end_ber(x, 0.0) == pytest.approx(x, rel=1e-15)
    t = per_hop_ber_target(1e-4)
    assert df_end_to_end_ber(t, t) == pytest.approx(1e-4, abs=1e-12)


def test_per_hop_target():
    assert per_hop_ber_target(0.0) == 0.0
    assert per_hop_ber_target(1.0) == 1.0
    with pytest.raises(DomainError):
        per_hop_ber_target(1.5)


@given(pe=st.floats(1e-10, 0.5))
def test_per_hop_round_trip_property(pe):
    t = per_hop_ber_target(pe)
    assert df_end_to_end_ber(t, t) == pytest.approx(pe, rel=1e-9)


def test_rate_factor_identity(params):
    target = per_hop_ber_target(params.target_ber_pe)
    for rate in (3.0, 6.0):
        assert rate_factor_f(rate, params) == pytest.approx(coded_power(rate, target, 1.0, params), rel=REL)


def test_rate_factor_oracle(params):
    assert rate_factor_f(6.0, params) == pytest.approx(F_6, rel=REL)


@pytest.mark.parametrize("r", [0.5, 3.0, 6.0])
def test_rate_factor_increasing(params, r):
    assert rate_factor_f(2 * r, params) > rate_factor_f(r, params)


@given(r=st.floats(0.05, 12.0), pe=st.floats(1e-9, 0.1))
def test_rate_factor_identity_property(r, pe):
    p = SystemParams.defaults(target_ber=pe)
    target = per_hop_ber_target(pe)
    assert rate_factor_f(r, p) == pytest.approx(coded_power(r, target, 1.0, p), rel=1e-9)


def test_constellation_size(params):
    assert constellation_size(2.0, params) == pytest.approx(8.0)
    with pytest.raises(DomainError):
        constellation_size(0.0, params)


def test_broadcasting(params):
    h = np.array([1e-12, 2e-12])
    out = coded_power(3.0, 1e-4, h, params)
    assert out.shape == (2,)
    assert out[0] == pytest.approx(2 * out[1])
