import math
from pathlib import Path

import numpy as np
import pytest

from judrs.config import build_config
from judrs.experiments import relative_saving, run

DATA = Path(__file__).parent / "data"


def sweep(exp, **kw):
    doc = {"experiment": exp, "seed": 17, "trials": 2000}
    doc.update(kw)
    return run(build_config(doc))[0]


def test_single_relay_all_schemes_equal():
    t = sweep("relay-sweep", relay_counts=[1], geometry={"d_ms_bs": [1200.0], "direct_link": [False]})
    rows = t.select(n_relays=1)
    energies = {r["scheme"]: r["energy_j_per_bit"] for r in rows}
    assert energies["judrs"] == energies["best_worst"] == energies["best_harmonic"]


def test_relay_sweep_orderings():
    t = sweep("relay-sweep", relay_counts=[1, 2, 4, 8], geometry={"d_ms_bs": [450.0]})
    for n in (1, 2, 4, 8):
        e = {r["scheme"]: r for r in t.select(n_relays=n)}
        assert e["judrs"]["energy_j_per_bit"] <= e["best_worst"]["energy_j_per_bit"]
        assert e["judrs"]["energy_j_per_bit"] <= e["best_harmonic"]["energy_j_per_bit"]
    j = [r for r in t.select(scheme="judrs")]
    for a, b in zip(j, j[1:]):
        tol = 2 * math.hypot(a["energy_std_err_j_per_bit"], b["energy_std_err_j_per_bit"])
        assert b["energy_j_per_bit"] <= a["energy_j_per_bit"] + tol


def test_breakdown_sums_to_total():
    t = sweep("relay-sweep", relay_counts=[3])
    for r in t.select():
        parts = r["ms_energy_j_per_bit"] + r["relay_uplink_energy_j_per_bit"] + r["relay_downlink_energy_j_per_bit"]
        assert parts == pytest.approx(r["energy_j_per_bit"], rel=1e-9)


def test_traffic_sweep_full_uplink_has_no_relay_downlink():
    t = sweep("traffic-sweep", zeta=[0.5, 1.0])
    for r in t.select(zeta=1.0):
        assert r["relay_downlink_energy_j_per_bit"] == 0.0


def test_traffic_sweep_saving_grows_as_zeta_falls():
    t = sweep("traffic-sweep", zeta=[0.2, 0.5, 0.8])
    for base in ("best_worst", "best_harmonic"):
        s = [relative_saving(t, z, base) for z in (0.2, 0.5, 0.8)]
        assert s[0] > s[1] > s[2]
    for z in (0.2, 0.5, 0.8):
        e = {r["scheme"]: r["energy_j_per_bit"] for r in t.select(zeta=z)}
        assert e["judrs"] <= min(e["best_worst"], e["best_harmonic"])


def test_sweep_determinism_across_workers():
    doc = {"experiment": "relay-sweep", "seed": 5, "trials": 5000, "relay_counts": [1, 3]}
    a = run(build_config(dict(doc, workers=1)))[0].to_table()
    b = run(build_config(dict(doc, workers=2)))[0].to_table()
    assert a == b


def test_region_golden_file():
    _, art = run(build_config({"experiment": "region", "zeta": [0.5], "grid": {"nx": 41, "ny": 41}}))
    assert art["grid_zeta0.5"] == (DATA / "region_zeta0.5_41x41.csv").read_text()


def test_region_area_ordering_where_regions_exist():
    cfg = build_config({"experiment": "region", "rate_r": 1.0, "geometry": {"d_ms_bs": [3000.0]},
                        "grid": {"nx": 101, "ny": 101}})
    t, art = run(cfg)
    cells = t.column("region_cells")
    assert cells[0] < cells[1] < cells[2]
    assert set(art) == {f"{k}_zeta{z!r}" for k in ("grid", "contours") for z in (0.2, 0.5, 0.8)}


def test_optimal_location_table():
    t = run(build_config({"experiment": "optimal-location"}))[0]
    d1 = t.column("d1_norm")
    assert d1 == sorted(d1)
    assert t.column("d2_norm")[1] > d1[1]


def test_dmt_same_seed_identical():
    doc = {"experiment": "dmt", "seed": 9, "trials": 20000, "relay_counts": [0, 1],
           "dmt": {"block_size": 4096}}
    a = run(build_config(doc))[0]
    b = run(build_config(dict(doc, workers=2)))[0]
    assert a.to_table() == b.to_table()
    assert a.summary["n0"]["admission_violations"] == 0


def test_dmt_direct_only_multiplexing_half():
    doc = {"experiment": "dmt", "seed": 2, "trials": 200000, "relay_counts": [0],
           "dmt": {"rho_db": [10, 20, 30, 40], "multiplexing_r": 0.5, "fixed_rate": None}}
    t = run(build_config(doc))[0]
    slope = t.summary["n0"]["fitted_slope"]
    lo, hi = t.summary["n0"]["slope_ci"]
    assert abs(slope - 0.5) < 0.1 and lo < hi


def test_select_trace():
    t, art = run(build_config({"experiment": "select", "seed": 3, "relay_counts": [4]}))
    assert t.summary["messages"] == len(t.rows)
    assert '"messages"' in art["trace"]
    assert set(t.summary["sigma_set"]) <= set(t.summary["gamma_set"])


def test_select_without_fading_needs_no_seed():
    t, _ = run(build_config({"experiment": "select", "geometry": {"fading": False, "relay_positions": [[250, 0]]}}))
    assert t.summary["mode"] == "direct"


def test_energy_sweep_rejects_zero_relays():
    with pytest.raises(ValueError):
        sweep("relay-sweep", relay_counts=[0, 1])


def test_document_format_round_trips():
    import json

    t = sweep("relay-sweep", relay_counts=[1], trials=100)
    doc = json.loads(t.to_document())
    assert [c["name"] for c in doc["columns"]] == t.columns
    assert doc["provenance"]["seed"] == 17
    assert np.isfinite(doc["rows"][0][5])
