"""Monte-Carlo outage probability and diversity-order estimation for JUDRS.

Channel gains are normalised by the mean MS-BS gain, so ``rho`` is the
average direct-link SNR and a relay at normalised distances ``(d1, d2)`` has
mean gains ``d1**-p`` and ``d2**-p``. Each trial draws ``h_D`` first and then
``(h1, h2)`` relay by relay, so the first ``N`` relays of a larger run see
the same channels as an ``N``-relay run with the same seed.

Trials are processed in fixed-size blocks, each with its own seed derived
from ``(seed, snr_index, block_index)``; outcomes are independent of how
blocks are spread over worker processes.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .core_model import Geometry, LinkState, SystemParams
from .link_budget import coded_power, rate_factor_f
from .relay_selection import selection_metric

UPLINK, DOWNLINK = "uplink", "downlink"
CAPACITY, MQAM = "capacity", "mqam"
MIN_EVENTS = 50
DEFAULT_BLOCK = 1 << 17


def mutual_info_direct(rho, h_d):
    """Direct-link mutual information in bits/s/Hz."""
    return np.log2(1.0 + np.multiply(rho, h_d))


def mutual_info_two_hop(rho, h_d, h2_selected):
    """Mutual information after relaying, combined with the direct copy.

    The half accounts for the two channel uses of the relayed transmission.
    """
    return 0.5 * np.log2(1.0 + np.multiply(rho, np.add(h_d, h2_selected)))


def theoretical_dmt(n: int, r: float) -> float:
    """Diversity gain claimed for JUDRS with ``n`` relays at multiplexing gain ``r``."""
    if n < 0 or r < 0:
        raise ValueError("n and r must be >= 0")
    return (n + 1) * max(0.0, 1.0 - (2 * n + 1) * r / (n + 1))


def snr_thresholds(rate_r: float, mode: str = CAPACITY,
                   params: Optional[SystemParams] = None) -> Tuple[float, float]:
    """Received-SNR requirements ``(direct at R, one hop at 2R)``.

    ``capacity`` uses Gaussian-codebook thresholds; ``mqam`` the coded-MQAM
    power requirements of the link budget divided by the noise power.
    """
    if mode == CAPACITY:
        return 2.0 ** rate_r - 1.0, 2.0 ** (2 * rate_r) - 1.0
    if mode == MQAM:
        if params is None:
            raise ValueError("mqam thresholds need SystemParams")
        a = coded_power(rate_r, params.target_ber_pe, 1.0, params) / params.noise_power
        b = rate_factor_f(2 * rate_r, params) / params.noise_power
        return float(a), float(b)
    raise ValueError(f"unknown threshold mode {mode!r}")


def _orient(h1, h2, direction):
    # downlink: the BS is the source, so the relay's first hop is h2
    if direction == UPLINK:
        return h1, h2
    if direction == DOWNLINK:
        return h2, h1
    raise ValueError(f"unknown direction {direction!r}")


def single_trial_outage(rho: float, rate_r: float, link_state: LinkState, direction: str = UPLINK,
                        relay_count: Optional[int] = None, zeta: float = 0.5,
                        mode: str = CAPACITY, params: Optional[SystemParams] = None) -> bool:
    """Outage of one transmission in ``direction`` over normalised gains.

    The destination first tries the direct copy; if that fails, the relay
    chosen from the candidate set retransmits and the destination combines.
    """
    n = link_state.relay_count if relay_count is None else relay_count
    a, b = snr_thresholds(rate_r, mode, params)
    h_d = link_state.h_direct
    if mode == CAPACITY:
        direct_ok = mutual_info_direct(rho, h_d) >= rate_r
    else:
        direct_ok = rho * h_d >= a
    if direct_ok:
        return False
    first, second = _orient(link_state.h1[:n], link_state.h2[:n], direction)
    best, best_metric = None, math.inf
    for i in range(n):
        if rho * first[i] < b:
            continue
        if rho * second[i] < b * max(0.0, 1.0 - h_d / first[i]):
            continue
        m = selection_metric(first[i], second[i], h_d, zeta)
        if m < best_metric:
            best, best_metric = i, m
    if best is None:
        return True
    if mode == CAPACITY:
        return bool(mutual_info_two_hop(rho, h_d, second[best]) < rate_r)
    return bool(rho * (h_d + second[best]) < b)


def draw_normalized_gains(rng: np.random.Generator, size: int, mean_h1: np.ndarray,
                          mean_h2: np.ndarray):
    """``(h1, h2, h_d)`` with shapes ``(size, N)``, ``(size, N)``, ``(size,)``."""
    n = len(mean_h1)
    h_d = rng.standard_exponential(size)
    h1 = np.empty((size, n))
    h2 = np.empty((size, n))
    for j in range(n):
        h1[:, j] = mean_h1[j] * rng.standard_exponential(size)
        h2[:, j] = mean_h2[j] * rng.standard_exponential(size)
    return h1, h2, h_d


def outage_block(rho: float, rate_r: float, h1, h2, h_d, direction: str = UPLINK,
                 zeta: float = 0.5, mode: str = CAPACITY,
                 params: Optional[SystemParams] = None) -> dict:
    """Vectorised :func:`single_trial_outage` with per-trial diagnostics.

    Returns boolean arrays ``direct_fail``, ``gamma_any``, ``sigma_any``,
    ``outage`` and ``violation`` (a candidate-set relay whose combined
    mutual information falls short of R), plus ``selected`` (-1 if none).
    """
    a, b = snr_thresholds(rate_r, mode, params)
    first, second = _orient(np.asarray(h1, float), np.asarray(h2, float), direction)
    h_d = np.asarray(h_d, float)
    t, n = first.shape
    if mode == CAPACITY:
        direct_fail = mutual_info_direct(rho, h_d) < rate_r
    else:
        direct_fail = rho * h_d < a
    if n:
        hd_col = h_d[:, None]
        in_gamma = rho * first >= b
        in_sigma = in_gamma & (rho * second >= b * np.maximum(0.0, 1.0 - hd_col / first))
        score = np.where(in_sigma, selection_metric(first, second, hd_col, zeta), np.inf)
        pick = np.argmin(score, axis=1)
        sigma_any = in_sigma.any(axis=1)
        h2_sel = second[np.arange(t), pick]
        if mode == CAPACITY:
            short = mutual_info_two_hop(rho, h_d, h2_sel) < rate_r
        else:
            short = rho * (h_d + h2_sel) < b
        gamma_any = in_gamma.any(axis=1)
    else:
        sigma_any = gamma_any = short = np.zeros(t, dtype=bool)
        pick = np.zeros(t, dtype=int)
    return {
        "direct_fail": direct_fail,
        "gamma_any": gamma_any,
        "sigma_any": sigma_any,
        "outage": direct_fail & (~sigma_any | short),
        "violation": sigma_any & short,
        "selected": np.where(sigma_any, pick, -1),
    }


@dataclass(frozen=True)
class DmtConfig:
    """Outage experiment setup.

    ``rate`` per SNR point is ``multiplexing_r * log2(rho)`` unless
    ``fixed_rate`` is given.
    """

    relay_count_n: int
    multiplexing_r: float
    snr_points_rho: Tuple[float, ...]
    trials_per_point: int
    zeta: float = 0.5
    geometry: Geometry = field(default_factory=lambda: Geometry.collinear(500.0, (250.0,)))
    pathloss_p: float = 3.76
    fixed_rate: Optional[float] = None
    mode: str = CAPACITY
    params: Optional[SystemParams] = None
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        object.__setattr__(self, "snr_points_rho", tuple(float(x) for x in self.snr_points_rho))
        if self.relay_count_n < 0:
            raise ValueError("relay_count_n must be >= 0")
        if self.relay_count_n > self.geometry.relay_count:
            raise ValueError("geometry has fewer relays than relay_count_n")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        rho = np.asarray(self.snr_points_rho)
        if rho.size == 0 or np.any(rho <= 0) or np.any(np.diff(rho) <= 0):
            raise ValueError("snr_points_rho must be positive and strictly increasing")
        if not 0 <= self.zeta <= 1:
            raise ValueError("zeta must lie in [0, 1]")
        if self.multiplexing_r < 0:
            raise ValueError("multiplexing_r must be >= 0")
        if self.fixed_rate is not None and not self.fixed_rate > 0:
            raise ValueError("fixed_rate must be > 0")
        if self.mode == MQAM and self.params is None:
            raise ValueError("mqam mode needs params")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    def rate_at(self, rho: float) -> float:
        if self.fixed_rate is not None:
            return self.fixed_rate
        return self.multiplexing_r * math.log2(rho)

    def mean_gains(self) -> Tuple[np.ndarray, np.ndarray]:
        d1, d2 = self.geometry.relay_distances()
        dd = self.geometry.d_ms_bs
        n = self.relay_count_n
        return (d1[:n] / dd) ** (-self.pathloss_p), (d2[:n] / dd) ** (-self.pathloss_p)


@dataclass(frozen=True)
class OutagePoint:
    rho: float
    rate_r: float
    p_out: float
    trials: int
    outage_count: float  # zeta-weighted
    ci_low: float
    ci_high: float
    uplink_outages: int
    downlink_outages: int
    violations: int
    variance: float  # of the estimate p_out

    @property
    def rho_db(self) -> float:
        return 10.0 * math.log10(self.rho)


@dataclass(frozen=True)
class OutageCurve:
    points: Tuple[OutagePoint, ...]
    fitted_slope: Optional[float]  # diversity estimate, -d log2 P / d log2 rho
    slope_ci: Optional[Tuple[float, float]]
    slope_stderr: Optional[float]
    relay_count_n: int
    multiplexing_r: float

    @property
    def violations(self) -> int:
        return sum(p.violations for p in self.points)

    @property
    def theoretical_d(self) -> float:
        return theoretical_dmt(self.relay_count_n, self.multiplexing_r)

    def to_table(self) -> str:
        buf = io.StringIO()
        buf.write("rho_db,rate_bps_hz,p_out,trials,outage_count,ci_low,ci_high\n")
        for p in self.points:
            buf.write(f"{p.rho_db!r},{p.rate_r!r},{p.p_out!r},{p.trials},{p.outage_count!r},"
                      f"{p.ci_low!r},{p.ci_high!r}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "fitted_slope": self.fitted_slope,
            "slope_ci": list(self.slope_ci) if self.slope_ci else None,
            "theoretical_d": self.theoretical_d,
            "relay_count_n": self.relay_count_n,
            "multiplexing_r": self.multiplexing_r,
            "admission_violations": self.violations,
        }


def _block_seed(seed: int, point: int, block: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(point, block))


def _run_block(args):
    config, seed, k, b, size = args
    rho = config.snr_points_rho[k]
    rate = config.rate_at(rho)
    rng = np.random.default_rng(_block_seed(seed, k, b))
    m1, m2 = config.mean_gains()
    h1, h2, h_d = draw_normalized_gains(rng, size, m1, m2)
    ul = outage_block(rho, rate, h1, h2, h_d, UPLINK, config.zeta, config.mode, config.params)
    dl = outage_block(rho, rate, h1, h2, h_d, DOWNLINK, config.zeta, config.mode, config.params)
    return (int(ul["outage"].sum()), int(dl["outage"].sum()),
            int((ul["outage"] & dl["outage"]).sum()),
            int(ul["violation"].sum() + dl["violation"].sum()))


def _wilson(p: float, n: int, z: float = 1.959963984540054) -> Tuple[float, float]:
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(max(p * (1 - p), 0.0) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def fit_diversity(points: Sequence[OutagePoint], min_events: int = MIN_EVENTS):
    """Weighted least-squares slope of ``log2 P_out`` against ``log2 rho``.

    Returns ``(slope, (lo, hi), stderr)`` with the sign flipped so that the
    slope estimates the diversity order, or ``(None, None, None)`` when fewer
    than two points carry ``min_events`` outages.
    """
    use = [p for p in points if p.outage_count >= min_events and p.p_out > 0]
    if len(use) < 2:
        return None, None, None
    x = np.array([math.log2(p.rho) for p in use])
    y = np.array([math.log2(p.p_out) for p in use])
    var_y = np.array([p.variance / (p.p_out * math.log(2)) ** 2 for p in use])
    w = 1.0 / np.maximum(var_y, 1e-300)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    beta = np.sum(w * (x - xm) * (y - ym)) / sxx
    se = math.sqrt(1.0 / sxx)
    d = -float(beta)
    z = 1.959963984540054
    return d, (d - z * se, d + z * se), se


def estimate_outage_curve(config: DmtConfig, seed: int, workers: int = 1) -> OutageCurve:
    """Estimate ``P_out = zeta P_UL + (1 - zeta) P_DL`` at every SNR point."""
    tasks = []
    for k in range(len(config.snr_points_rho)):
        remaining, b = config.trials_per_point, 0
        while remaining > 0:
            size = min(config.block_size, remaining)
            tasks.append((config, seed, k, b, size))
            remaining -= size
            b += 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_run_block(t) for t in tasks]

    z = config.zeta
    points = []
    for k, rho in enumerate(config.snr_points_rho):
        rows = [r for t, r in zip(tasks, results) if t[2] == k]
        ul = sum(r[0] for r in rows)
        dl = sum(r[1] for r in rows)
        both = sum(r[2] for r in rows)
        viol = sum(r[3] for r in rows)
        n = config.trials_per_point
        count = z * ul + (1 - z) * dl
        p = count / n
        mean_sq = (z * z * ul + (1 - z) ** 2 * dl + 2 * z * (1 - z) * both) / n
        var = max(mean_sq - p * p, 0.0) / n
        lo, hi = _wilson(p, n)
        points.append(OutagePoint(rho, config.rate_at(rho), p, n, count, lo, hi, ul, dl, viol, var))
    slope, ci, se = fit_diversity(points)
    return OutageCurve(tuple(points), slope, ci, se, config.relay_count_n, config.multiplexing_r)
