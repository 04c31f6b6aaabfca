"""Relay selection rules: minimum-energy (JUDRS) and two max-min baselines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core_model import DomainError, SystemParams
from .energy_model import (EnergyReport, coop_energy_components, coop_report,
                           direct_energy_per_bit, direct_feasible, direct_report)
from .link_budget import rate_factor_f

COOPERATIVE = "cooperative"
DIRECT = "direct"
INFEASIBLE = "infeasible"

# integer mode codes used by the batch path
MODE_INFEASIBLE, MODE_DIRECT, MODE_COOPERATIVE = -1, 0, 1
MODE_NAMES = {MODE_INFEASIBLE: INFEASIBLE, MODE_DIRECT: DIRECT, MODE_COOPERATIVE: COOPERATIVE}

SCHEMES = ("judrs", "best_worst", "best_harmonic")


@dataclass(frozen=True)
class CandidateRelay:
    index: int
    h1: float
    h2: float

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 > 0):
            raise DomainError(f"relay {self.index}: gains must be > 0")


@dataclass(frozen=True)
class SelectionDecision:
    mode: str
    relay_index: Optional[int]
    metric_value: float
    energy_report: Optional[EnergyReport]

    @property
    def energy_per_bit(self) -> float:
        return self.energy_report.energy_per_bit if self.energy_report else float("nan")


def selection_metric(h1, h2, h_d, zeta):
    """Energy-ranking metric ``1/h1 + zeta/h2 - h_d/(h1 h2)``.

    The relay terms are floored at zero when the direct link is stronger than
    a relay hop, so the metric stays the transmit part of the energy per bit
    divided by ``F(2R) / 2RB`` for every input.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    h_d = np.asarray(h_d, dtype=float)
    if np.any(~(h1 > 0)) or np.any(~(h2 > 0)) or np.any(h_d < 0):
        raise DomainError("gains must be > 0 (direct gain >= 0)")
    m = (zeta / h1 + zeta * np.maximum(0.0, 1.0 - h_d / h1) / h2
         + (1.0 - zeta) * np.maximum(0.0, 1.0 - h_d / h2) / h1)
    return float(m) if m.ndim == 0 else m


def relay_feasible(h1, h2, h_d, rate_r, params: SystemParams):
    """Both relay power budgets hold: MS uplink and relay uplink within P_max."""
    budget = params.p_max - params.p_c
    g = rate_factor_f(2 * rate_r, params)
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    ok = (budget * h1 >= g) & (budget * h2 >= g * np.maximum(0.0, 1.0 - h_d / h1))
    return bool(ok) if ok.ndim == 0 else ok


def _feasible(candidates, h_d, rate_r, params):
    return [c for c in candidates if relay_feasible(c.h1, c.h2, h_d, rate_r, params)]


def _argbest(candidates, key):
    # lowest index wins ties
    return min(candidates, key=lambda c: (key(c), c.index))


def min_energy_select(candidates: Sequence[CandidateRelay], h_d: float, zeta: float,
                      rate_r: float, params: SystemParams) -> SelectionDecision:
    """Pick the feasible relay of least energy, or go direct if that is cheaper."""
    feasible = _feasible(candidates, h_d, rate_r, params)
    can_direct = bool(direct_feasible(h_d, rate_r, params))
    best = None
    metric = float("nan")
    if feasible:
        best = _argbest(feasible, lambda c: selection_metric(c.h1, c.h2, h_d, zeta))
        metric = selection_metric(best.h1, best.h2, h_d, zeta)
    if best is not None:
        report = coop_report(best.h1, best.h2, h_d, zeta, rate_r, params, relay_index=best.index)
        if can_direct and direct_energy_per_bit(h_d, zeta, rate_r, params) <= report.energy_per_bit:
            return SelectionDecision(DIRECT, None, metric, direct_report(h_d, zeta, rate_r, params))
        return SelectionDecision(COOPERATIVE, best.index, metric, report)
    if can_direct:
        return SelectionDecision(DIRECT, None, metric, direct_report(h_d, zeta, rate_r, params))
    return SelectionDecision(INFEASIBLE, None, metric, None)


def best_worst_channel_select(candidates: Sequence[CandidateRelay]) -> int:
    """Index of the relay whose weaker hop is strongest."""
    if not candidates:
        raise ValueError("no candidate relays")
    return _argbest(candidates, lambda c: -min(c.h1, c.h2)).index


def best_harmonic_mean_select(candidates: Sequence[CandidateRelay]) -> int:
    """Index of the relay with the largest harmonic mean of its two gains."""
    if not candidates:
        raise ValueError("no candidate relays")
    return _argbest(candidates, lambda c: -1.0 / (1.0 / c.h1 + 1.0 / c.h2)).index


def baseline_select(rule: str, candidates: Sequence[CandidateRelay], h_d: float, zeta: float,
                    rate_r: float, params: SystemParams) -> SelectionDecision:
    """Apply a baseline rule over the power-feasible relays.

    Baselines relay whenever some relay is feasible; they fall back to the
    direct link only when none is.
    """
    pick = {"best_worst": best_worst_channel_select,
            "best_harmonic": best_harmonic_mean_select}[rule]
    feasible = _feasible(candidates, h_d, rate_r, params)
    if feasible:
        idx = pick(feasible)
        c = next(c for c in feasible if c.index == idx)
        return SelectionDecision(COOPERATIVE, idx, selection_metric(c.h1, c.h2, h_d, zeta),
                                 coop_report(c.h1, c.h2, h_d, zeta, rate_r, params, relay_index=idx))
    if direct_feasible(h_d, rate_r, params):
        return SelectionDecision(DIRECT, None, float("nan"), direct_report(h_d, zeta, rate_r, params))
    return SelectionDecision(INFEASIBLE, None, float("nan"), None)


def select_batch(scheme: str, h1: np.ndarray, h2: np.ndarray, h_d: np.ndarray, zeta: float,
                 rate_r: float, params: SystemParams) -> dict:
    """Vectorised selection over ``T`` independent trials.

    ``h1`` and ``h2`` have shape ``(T, N)``, ``h_d`` shape ``(T,)``. Returns a
    dict of ``(T,)`` arrays: ``mode`` (``MODE_*`` codes), ``relay`` (-1 when
    none), ``energy``, ``ms``, ``relay_ul`` and ``relay_dl`` (J/bit, NaN when
    infeasible). Produces the same decisions as the per-trial functions.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    h_d = np.asarray(h_d, dtype=float)
    t, n = h1.shape
    can_direct = direct_feasible(h_d, rate_r, params)
    e_direct = np.asarray(direct_energy_per_bit(h_d, zeta, rate_r, params), dtype=float)

    if n:
        hd_col = h_d[:, None]
        feasible = relay_feasible(h1, h2, hd_col, rate_r, params)
        any_feasible = feasible.any(axis=1)
        if scheme == "judrs":
            score = np.where(feasible, selection_metric(h1, h2, hd_col, zeta), np.inf)
            pick = np.argmin(score, axis=1)
        elif scheme == "best_worst":
            score = np.where(feasible, np.minimum(h1, h2), -np.inf)
            pick = np.argmax(score, axis=1)
        elif scheme == "best_harmonic":
            score = np.where(feasible, 1.0 / (1.0 / h1 + 1.0 / h2), -np.inf)
            pick = np.argmax(score, axis=1)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        rows = np.arange(t)
        ms, rul, rdl = coop_energy_components(h1[rows, pick], h2[rows, pick], h_d, zeta, rate_r, params)
        ms, rul, rdl = (np.asarray(x, dtype=float) for x in (ms, rul, rdl))
        e_coop = ms + rul + rdl
    else:
        any_feasible = np.zeros(t, dtype=bool)
        pick = np.zeros(t, dtype=int)
        ms = rul = rdl = e_coop = np.full(t, np.inf)

    use_coop = any_feasible.copy()
    if scheme == "judrs":
        use_coop &= ~(can_direct & (e_direct <= e_coop))
    use_direct = ~use_coop & can_direct

    mode = np.full(t, MODE_INFEASIBLE)
    mode[use_direct] = MODE_DIRECT
    mode[use_coop] = MODE_COOPERATIVE
    nan = np.full(t, np.nan)
    out_ms = np.where(use_coop, ms, np.where(use_direct, e_direct, nan))
    out_rul = np.where(use_coop, rul, np.where(use_direct, 0.0, nan))
    out_rdl = np.where(use_coop, rdl, np.where(use_direct, 0.0, nan))
    return {
        "mode": mode,
        "relay": np.where(use_coop, pick, -1),
        "energy": out_ms + out_rul + out_rdl,
        "ms": out_ms,
        "relay_ul": out_rul,
        "relay_dl": out_rdl,
    }
