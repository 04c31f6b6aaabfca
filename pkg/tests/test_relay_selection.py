import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from judrs.core_model import SystemParams, pathloss_gain
from judrs.energy_model import coop_energy_per_bit
from judrs.link_budget import rate_factor_f
from judrs.relay_selection import (COOPERATIVE, DIRECT, INFEASIBLE, MODE_NAMES, SCHEMES,
                                   CandidateRelay, baseline_select, best_harmonic_mean_select,
                                   best_worst_channel_select, min_energy_select, relay_feasible,
                                   select_batch, selection_metric)

import oracles


def random_instance(rng, n, d=450.0, params=None):
    """Relays dropped in a disc around the link, Rayleigh fading on every link."""
    params = params or SystemParams.defaults()
    r = 0.6 * d * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    x, y = 0.5 * d + r * np.cos(t), r * np.sin(t)
    h1 = pathloss_gain(np.hypot(x, y), params) * rng.standard_exponential(n)
    h2 = pathloss_gain(np.hypot(x - d, y), params) * rng.standard_exponential(n)
    hd = pathloss_gain(d, params) * rng.standard_exponential()
    return h1, h2, hd


def candidates(h1, h2):
    return [CandidateRelay(i, float(a), float(b)) for i, (a, b) in enumerate(zip(h1, h2))]


def test_metric_trivial():
    assert selection_metric(2.0, 4.0, 0.0, 1.0) == pytest.approx(0.5 + 0.25)
    assert selection_metric(2.0, 2.0, 0.0, 0.3) == pytest.approx(1.3 / 2.0)


def test_metric_recomputation():
    rng = np.random.default_rng(5)
    for _ in range(200):
        h1, h2 = rng.uniform(0.5, 5.0, 2)
        hd = rng.uniform(0, min(h1, h2))
        z = rng.uniform(0, 1)
        assert selection_metric(h1, h2, hd, z) == pytest.approx(1 / h1 + z / h2 - hd / (h1 * h2), rel=1e-12)


def test_metric_is_affine_in_energy(params):
    rng = np.random.default_rng(6)
    scale = rate_factor_f(6.0, params) / (6.0 * params.bandwidth_b)
    for _ in range(100):
        h1, h2, hd = 10 ** rng.uniform(-12, -9, 3)
        z = rng.uniform(0, 1)
        circuit = (1 + z) * params.p_c / (6.0 * params.bandwidth_b)
        e = coop_energy_per_bit(h1, h2, hd, z, 3.0, params)
        assert scale * selection_metric(h1, h2, hd, z) + circuit == pytest.approx(e, rel=1e-12)


@given(h1=st.floats(1e-3, 1e3), h2=st.floats(1e-3, 1e3), z=st.floats(0.0, 1.0), a=st.floats(1e-2, 1e2))
def test_metric_scale_property(h1, h2, z, a):
    assert selection_metric(a * h1, a * h2, 0.0, z) == pytest.approx(selection_metric(h1, h2, 0.0, z) / a, rel=1e-12)


@given(h1=st.floats(1e-3, 1e3), h2=st.floats(1e-3, 1e3), z=st.floats(0.01, 1.0), s=st.floats(1.01, 10.0))
def test_metric_decreasing_without_direct(h1, h2, z, s):
    m = selection_metric(h1, h2, 0.0, z)
    assert selection_metric(s * h1, h2, 0.0, z) < m
    assert selection_metric(h1, s * h2, 0.0, z) < m


def test_empty_candidates_direct(params):
    d = min_energy_select([], pathloss_gain(450.0, params), 0.5, 3.0, params)
    assert d.mode == DIRECT and d.relay_index is None


def test_empty_candidates_infeasible(params):
    d = min_energy_select([], pathloss_gain(5000.0, params), 0.5, 3.0, params)
    assert d.mode == INFEASIBLE and np.isnan(d.energy_per_bit)


def test_dominating_candidate(params):
    hd = 1e-30
    weak, strong = CandidateRelay(0, 2e-11, 2e-11), CandidateRelay(1, 4e-11, 3e-11)
    d = min_energy_select([weak, strong], hd, 0.5, 3.0, params)
    assert d.mode == COOPERATIVE and d.relay_index == 1


def test_min_energy_matches_exhaustive_oracle(params):
    rng = np.random.default_rng(11)
    for _ in range(60):
        h1, h2, hd = random_instance(rng, 10, d=float(rng.uniform(300, 1500)), params=params)
        mode, idx = oracles.best_by_energy([mp.mpf(x) for x in h1], [mp.mpf(x) for x in h2],
                                           mp.mpf(hd), mp.mpf("0.5"), 3)
        dec = min_energy_select(candidates(h1, h2), hd, 0.5, 3.0, params)
        assert (dec.mode, dec.relay_index) == (mode, idx)


def test_baseline_trivial():
    only = [CandidateRelay(3, 1.0, 2.0)]
    assert best_worst_channel_select(only) == 3
    assert best_harmonic_mean_select(only) == 3
    assert best_worst_channel_select([CandidateRelay(0, 4, 1), CandidateRelay(1, 2, 2)]) == 1
    h = 1.0
    assert best_harmonic_mean_select([CandidateRelay(0, h, h), CandidateRelay(1, h / 2, 2 * h)]) == 0
    with pytest.raises(ValueError):
        best_worst_channel_select([])


def test_baselines_match_brute_force():
    rng = np.random.default_rng(12)
    for _ in range(100):
        h1, h2 = rng.exponential(size=(2, 100))
        cands = candidates(h1, h2)
        assert best_worst_channel_select(cands) == max(range(100), key=lambda i: min(h1[i], h2[i]))
        assert best_harmonic_mean_select(cands) == max(range(100), key=lambda i: h1[i] * h2[i] / (h1[i] + h2[i]))


def test_ties_go_to_lowest_index(params):
    c = [CandidateRelay(0, 3e-11, 3e-11), CandidateRelay(1, 3e-11, 3e-11)]
    assert min_energy_select(c, 1e-30, 0.5, 3.0, params).relay_index == 0
    assert best_worst_channel_select(c[::-1]) == 0


def test_relay_feasibility(params):
    g = rate_factor_f(6.0, params)
    budget = params.p_max - params.p_c
    assert relay_feasible(1.01 * g / budget, 1.01 * g / budget, 0.0, 3.0, params)
    assert not relay_feasible(0.99 * g / budget, 1.0, 0.0, 3.0, params)
    # direct link at least as strong as h1: no relay share, any h2 passes
    assert relay_feasible(1.01 * g / budget, 1e-30, 1.01 * g / budget, 3.0, params)


def test_baseline_select_feasibility_filter(params):
    g = rate_factor_f(6.0, params) / (params.p_max - params.p_c)
    c = [CandidateRelay(0, 100 * g, 0.5 * g), CandidateRelay(1, 1.5 * g, 1.5 * g)]
    d = baseline_select("best_worst", c, 1e-30, 0.5, 3.0, params)
    assert d.relay_index == 1


@pytest.mark.parametrize("scheme", SCHEMES)
def test_batch_matches_scalar(params, scheme):
    rng = np.random.default_rng(13)
    for d in (450.0, 1200.0):
        rows = [random_instance(rng, 6, d=d, params=params) for _ in range(300)]
        h1 = np.array([r[0] for r in rows])
        h2 = np.array([r[1] for r in rows])
        hd = np.array([r[2] for r in rows])
        out = select_batch(scheme, h1, h2, hd, 0.4, 3.0, params)
        for t in range(len(rows)):
            cands = candidates(h1[t], h2[t])
            if scheme == "judrs":
                dec = min_energy_select(cands, hd[t], 0.4, 3.0, params)
            else:
                dec = baseline_select(scheme, cands, hd[t], 0.4, 3.0, params)
            assert MODE_NAMES[int(out["mode"][t])] == dec.mode
            assert (dec.relay_index if dec.relay_index is not None else -1) == out["relay"][t]
            if dec.energy_report is None:
                assert np.isnan(out["energy"][t])
            else:
                assert out["energy"][t] == pytest.approx(dec.energy_per_bit, rel=1e-12)


def test_batch_zero_relays(params):
    hd = np.array([pathloss_gain(450.0, params), pathloss_gain(5000.0, params)])
    out = select_batch("judrs", np.empty((2, 0)), np.empty((2, 0)), hd, 0.5, 3.0, params)
    assert list(out["mode"]) == [0, -1]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 8), z=st.floats(0.0, 1.0))
def test_judrs_never_worse_than_baselines(seed, n, z):
    p = SystemParams.defaults()
    rng = np.random.default_rng(seed)
    h1, h2, hd = random_instance(rng, n, params=p)
    j = min_energy_select(candidates(h1, h2), hd, z, 3.0, p)
    for rule in ("best_worst", "best_harmonic"):
        b = baseline_select(rule, candidates(h1, h2), hd, z, 3.0, p)
        if b.energy_report is not None:
            assert j.energy_per_bit <= b.energy_per_bit * (1 + 1e-12)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(0, 6), d=st.floats(300.0, 2000.0))
def test_decision_invariants(seed, n, d):
    p = SystemParams.defaults()
    rng = np.random.default_rng(seed)
    h1, h2, hd = random_instance(rng, n, d=d, params=p)
    cands = candidates(h1, h2)
    dec = min_energy_select(cands, hd, 0.5, 3.0, p)
    feasible = [c for c in cands if relay_feasible(c.h1, c.h2, hd, 3.0, p)]
    if dec.mode == COOPERATIVE:
        c = cands[dec.relay_index]
        assert relay_feasible(c.h1, c.h2, hd, 3.0, p)
    elif dec.mode == DIRECT:
        best = min((coop_energy_per_bit(c.h1, c.h2, hd, 0.5, 3.0, p) for c in feasible), default=np.inf)
        assert dec.energy_per_bit <= best
    else:
        assert not feasible
    again = min_energy_select(cands, hd, 0.5, 3.0, p)
    assert (again.mode, again.relay_index, again.energy_report) == (dec.mode, dec.relay_index, dec.energy_report)
