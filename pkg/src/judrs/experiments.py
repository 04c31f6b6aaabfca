"""Experiment drivers behind the CLI subcommands.

Stochastic experiments split trials into fixed-size blocks seeded from
``(seed, experiment tag, scenario index, block index)`` and merge block
statistics in block order, so tables are byte-identical for any worker count.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Tuple

import numpy as np

from .config import ExperimentConfig
from .core_model import Geometry, Scenario, SystemParams, TrafficProfile, pathloss_gain
from .geometry_analysis import GridSpec, compute_region_grid, optimal_relay_location
from .outage_dmt import DmtConfig, estimate_outage_curve
from .protocol import run_judrs
from .relay_selection import MODE_COOPERATIVE, MODE_INFEASIBLE, SCHEMES, select_batch
from .results import ResultTable, make_provenance

SWEEP_BLOCK = 2048
# fixed MS-BS gain multiplier standing in for a blocked direct link
BLOCKED_DIRECT_SCALE = 1e-6
_TAGS = {"relay-sweep": 1, "traffic-sweep": 2, "select": 4}


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def draw_sweep_links(rng: np.random.Generator, size: int, d_ms_bs: float, n_relays: int,
                     disc_factor: float, direct_link: bool, params: SystemParams):
    """Fading channels for relays dropped uniformly in a disc around the link.

    The disc has diameter ``disc_factor * d_ms_bs`` and is centred on the
    MS-BS midpoint. Returns ``(h1, h2, h_d)`` of shapes ``(size, N)``,
    ``(size, N)``, ``(size,)``.
    """
    v_d = rng.standard_exponential(size)
    if direct_link:
        h_d = pathloss_gain(d_ms_bs, params) * v_d
    else:
        h_d = np.full(size, BLOCKED_DIRECT_SCALE * pathloss_gain(d_ms_bs, params))
    radius = 0.5 * disc_factor * d_ms_bs
    h1 = np.empty((size, n_relays))
    h2 = np.empty((size, n_relays))
    for j in range(n_relays):
        r = radius * np.sqrt(rng.random(size))
        theta = 2.0 * np.pi * rng.random(size)
        x = 0.5 * d_ms_bs + r * np.cos(theta)
        y = r * np.sin(theta)
        d1 = np.maximum(np.hypot(x, y), 1e-3)
        d2 = np.maximum(np.hypot(x - d_ms_bs, y), 1e-3)
        h1[:, j] = pathloss_gain(d1, params) * rng.standard_exponential(size)
        h2[:, j] = pathloss_gain(d2, params) * rng.standard_exponential(size)
    return h1, h2, h_d


def _moments(x: np.ndarray) -> Tuple[int, float, float]:
    n = int(x.size)
    if n == 0:
        return 0, 0.0, 0.0
    mean = float(x.mean())
    return n, mean, float(((x - mean) ** 2).sum())


def _merge(a, b):
    # pairwise merge of (count, mean, M2)
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    if n == 0:
        return 0, 0.0, 0.0
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def _sweep_block(args):
    params, d, direct, disc, counts, zetas, rate, seed, tag, s_idx, b, size = args
    rng = _rng(seed, tag, s_idx, b)
    h1, h2, h_d = draw_sweep_links(rng, size, d, max(counts), disc, direct, params)
    stats = {}
    for zi, z in enumerate(zetas):
        for n in counts:
            for scheme in SCHEMES:
                out = select_batch(scheme, h1[:, :n], h2[:, :n], h_d, z, rate, params)
                served = out["mode"] != MODE_INFEASIBLE
                stats[(zi, n, scheme)] = (
                    _moments(out["energy"][served]),
                    float(out["ms"][served].sum()),
                    float(out["relay_ul"][served].sum()),
                    float(out["relay_dl"][served].sum()),
                    int(np.count_nonzero(out["mode"] == MODE_COOPERATIVE)),
                )
    return stats


def _map(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


SWEEP_COLUMNS = ["d_ms_bs_m", "direct_link", "zeta", "n_relays", "scheme", "energy_j_per_bit",
                 "energy_std_err_j_per_bit", "ms_energy_j_per_bit", "relay_uplink_energy_j_per_bit",
                 "relay_downlink_energy_j_per_bit", "trials", "served", "cooperative_fraction"]
SWEEP_UNITS = ["m", "-", "1", "1", "-", "J/bit", "J/bit", "J/bit", "J/bit", "J/bit", "1", "1", "1"]


def energy_sweep(config: ExperimentConfig, tag: int) -> List[list]:
    """Mean energy per bit for every (distance, zeta, N, scheme) cell."""
    counts = tuple(config.relay_counts)
    if min(counts) < 1:
        raise ValueError("energy sweeps need relay_counts >= 1")
    tasks = []
    for s_idx, (d, direct) in enumerate(zip(config.d_ms_bs, config.direct_link)):
        remaining, b = config.trials, 0
        while remaining > 0:
            size = min(SWEEP_BLOCK, remaining)
            tasks.append((config.params, d, direct, config.relay_disc_factor, counts, config.zeta,
                          config.rate_r, config.seed, tag, s_idx, b, size))
            remaining -= size
            b += 1
    results = _map(_sweep_block, tasks, config.workers)

    rows = []
    for s_idx, (d, direct) in enumerate(zip(config.d_ms_bs, config.direct_link)):
        blocks = [r for t, r in zip(tasks, results) if t[9] == s_idx]
        for zi, z in enumerate(config.zeta):
            for n in counts:
                for scheme in SCHEMES:
                    mom = (0, 0.0, 0.0)
                    ms = rul = rdl = 0.0
                    coop = 0
                    for blk in blocks:
                        m, a, bb, c, k = blk[(zi, n, scheme)]
                        mom = _merge(mom, m)
                        ms, rul, rdl, coop = ms + a, rul + bb, rdl + c, coop + k
                    served, mean, m2 = mom
                    se = math.sqrt(m2 / (served - 1) / served) if served > 1 else float("nan")
                    div = served if served else float("nan")
                    rows.append([d, direct, z, n, scheme, mean if served else float("nan"), se,
                                 ms / div, rul / div, rdl / div, config.trials, served,
                                 coop / config.trials])
    return rows


def run_relay_sweep(config: ExperimentConfig) -> ResultTable:
    rows = energy_sweep(config, _TAGS["relay-sweep"])
    return ResultTable(SWEEP_COLUMNS, SWEEP_UNITS, rows,
                       make_provenance(config.experiment, config.resolved(), config.seed))


def run_traffic_sweep(config: ExperimentConfig) -> ResultTable:
    rows = energy_sweep(config, _TAGS["traffic-sweep"])
    return ResultTable(SWEEP_COLUMNS, SWEEP_UNITS, rows,
                       make_provenance(config.experiment, config.resolved(), config.seed))


def relative_saving(table: ResultTable, zeta: float, baseline: str, n_relays: int = None,
                    d_ms_bs: float = None) -> float:
    """``(E_baseline - E_judrs) / E_baseline`` from a sweep table."""
    match = {"zeta": zeta}
    if n_relays is not None:
        match["n_relays"] = n_relays
    if d_ms_bs is not None:
        match["d_ms_bs_m"] = d_ms_bs
    (j,) = table.select(scheme="judrs", **match)
    (b,) = table.select(scheme=baseline, **match)
    return (b["energy_j_per_bit"] - j["energy_j_per_bit"]) / b["energy_j_per_bit"]


def _grid_spec(config: ExperimentConfig, d: float) -> GridSpec:
    base = GridSpec.around_link(d)
    g = dict(x_min=base.x_min, x_max=base.x_max, y_min=base.y_min, y_max=base.y_max,
             nx=base.nx, ny=base.ny)
    g.update(config.grid or {})
    return GridSpec(**g)


def run_region(config: ExperimentConfig) -> Tuple[ResultTable, Dict[str, str]]:
    """Region-area summary per zeta plus grid and contour exports."""
    d = config.d_ms_bs[0]
    spec = _grid_spec(config, d)
    rows, artifacts = [], {}
    for z in config.zeta:
        grid = compute_region_grid(spec, d, z, config.rate_r, config.params)
        vals = grid.values
        j, i = np.unravel_index(np.nanargmax(vals), vals.shape)
        xs, ys = spec.axes()
        rows.append([d, z, grid.region_cells(), grid.region_area_m2(), float(vals[j, i]),
                     float(xs[i]), float(ys[j])])
        artifacts[f"grid_zeta{z!r}"] = grid.to_table()
        artifacts[f"contours_zeta{z!r}"] = grid.contour_listing(config.contour_levels)
    cols = ["d_ms_bs_m", "zeta", "region_cells", "region_area_m2", "max_e_saving", "argmax_x_m",
            "argmax_y_m"]
    units = ["m", "1", "1", "m^2", "1", "m", "m"]
    return ResultTable(cols, units, rows, make_provenance(config.experiment, config.resolved(), config.seed)), artifacts


def run_optimal_location(config: ExperimentConfig) -> ResultTable:
    d = config.d_ms_bs[0]
    rows = []
    for z in config.zeta:
        opt = optimal_relay_location(d, z, config.rate_r, config.params)
        rows.append([d, z, opt.d1_norm, opt.d2_norm, float(opt.position[0]), float(opt.position[1]),
                     opt.e_saving])
    cols = ["d_ms_bs_m", "zeta", "d1_norm", "d2_norm", "x_m", "y_m", "e_saving"]
    return ResultTable(cols, ["m", "1", "1", "1", "m", "m", "1"], rows,
                       make_provenance(config.experiment, config.resolved(), config.seed))


def dmt_geometry(config: ExperimentConfig, n: int) -> Geometry:
    """Explicit relay positions if configured, else ``n`` relays evenly spaced on the axis."""
    d = config.d_ms_bs[0]
    if config.relay_positions is not None:
        return Geometry((0.0, 0.0), (d, 0.0), config.relay_positions)
    return Geometry.collinear(d, [d * (j + 1) / (n + 1) for j in range(n)])


def run_dmt(config: ExperimentConfig) -> ResultTable:
    s = config.dmt
    rhos = [10.0 ** (x / 10.0) for x in s.rho_db]
    rows, summary = [], {}
    for n in config.relay_counts:
        dc = DmtConfig(n, s.multiplexing_r, rhos, config.trials, zeta=config.zeta[0],
                       geometry=dmt_geometry(config, n), pathloss_p=config.params.pathloss_p,
                       fixed_rate=s.fixed_rate, mode=s.mode,
                       params=config.params if s.mode == "mqam" else None, block_size=s.block_size)
        curve = estimate_outage_curve(dc, config.seed, workers=config.workers)
        for p in curve.points:
            rows.append([n, s.multiplexing_r, p.rho_db, p.rate_r, p.p_out, p.trials, p.outage_count,
                         p.ci_low, p.ci_high, curve.theoretical_d,
                         curve.fitted_slope if curve.fitted_slope is not None else float("nan")])
        summary[f"n{n}"] = curve.summary()
    cols = ["n_relays", "multiplexing_r", "rho_db", "rate_bps_hz", "p_out", "trials", "outage_count",
            "ci_low", "ci_high", "theoretical_d", "fitted_slope"]
    units = ["1", "1", "dB", "bit/s/Hz", "1", "1", "1", "1", "1", "1", "1"]
    return ResultTable(cols, units, rows, make_provenance(config.experiment, config.resolved(), config.seed),
                       summary)


def run_select(config: ExperimentConfig) -> Tuple[ResultTable, Dict[str, str]]:
    """One handshake on a configured or randomly dropped relay layout."""
    d = config.d_ms_bs[0]
    rng = _rng(config.seed, _TAGS["select"]) if config.seed is not None else None
    if config.relay_positions is not None:
        positions = config.relay_positions
    else:
        if rng is None:
            raise ValueError("random relay placement needs a seed")
        n = config.relay_counts[0]
        radius = 0.5 * config.relay_disc_factor * d
        r = radius * np.sqrt(rng.random(n))
        theta = 2.0 * np.pi * rng.random(n)
        positions = tuple((float(0.5 * d + a * math.cos(t)), float(a * math.sin(t))) for a, t in zip(r, theta))
    scenario = Scenario(Geometry((0.0, 0.0), (d, 0.0), positions), TrafficProfile(config.zeta[0]),
                        config.rate_r, config.params, fading=config.fading,
                        direct_gain_scale=1.0 if config.direct_link[0] else BLOCKED_DIRECT_SCALE)
    trace = run_judrs(scenario, rng)
    rows = [[m.step, m.sender, " ".join(m.receivers), json.dumps(m.payload, sort_keys=True)]
            for m in trace.message_log]
    dec = trace.decision
    summary = {"mode": dec.mode, "relay_index": dec.relay_index,
               "energy_j_per_bit": dec.energy_per_bit if dec.energy_report else None,
               "gamma_set": list(trace.gamma_set), "sigma_set": list(trace.sigma_set),
               "messages": trace.message_count,
               "separate_selection_messages": trace.separate_selection_message_count()}
    table = ResultTable(["step", "sender", "receivers", "payload"], ["1", "-", "-", "-"], rows,
                        make_provenance(config.experiment, config.resolved(), config.seed), summary)
    return table, {"trace": trace.to_document()}


def run(config: ExperimentConfig) -> Tuple[ResultTable, Dict[str, str]]:
    """Dispatch on ``config.experiment``; returns the table and any side exports."""
    exp = config.experiment
    if exp == "relay-sweep":
        return run_relay_sweep(config), {}
    if exp == "traffic-sweep":
        return run_traffic_sweep(config), {}
    if exp == "region":
        return run_region(config)
    if exp == "optimal-location":
        return run_optimal_location(config), {}
    if exp == "dmt":
        return run_dmt(config), {}
    if exp == "select":
        return run_select(config)
    raise ValueError(f"unknown experiment {exp!r}")
