"""Five-step joint uplink/downlink relay-selection handshake.

Step 1  MS broadcasts RTS1 at ``P_max - P_C``; relays measure h1, BS measures h_D.
Step 2  relays passing the first threshold send RTS2 + CQI (their h1) to the BS.
Step 3  BS measures h2 of each responder and forms the candidate set.
Step 4  BS announces the chosen relay (or direct mode) together with h_D.
Step 5  uplink and downlink data exchange at the computed powers.

A single handshake serves both directions. Relays are indexed from 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .core_model import LinkState, Scenario, SystemParams
from .link_budget import rate_factor_f
from .relay_selection import (COOPERATIVE, DIRECT, CandidateRelay, SelectionDecision,
                              min_energy_select)


@dataclass(frozen=True)
class Message:
    step: int
    sender: str
    receivers: Tuple[str, ...]
    payload: Dict[str, object]

    def to_record(self) -> dict:
        return {"step": self.step, "sender": self.sender,
                "receivers": list(self.receivers), "payload": self.payload}


@dataclass(frozen=True)
class ProtocolTrace:
    gamma_set: Tuple[int, ...]
    sigma_set: Tuple[int, ...]
    threshold_gth1: float
    threshold_gth2: Dict[int, float]
    decision: SelectionDecision
    message_log: Tuple[Message, ...]
    link_state: LinkState = field(compare=False)

    @property
    def message_count(self) -> int:
        return len(self.message_log)

    def selection_message_count(self) -> int:
        """Messages spent on selection (steps 1-4)."""
        return sum(1 for m in self.message_log if m.step <= 4)

    def separate_selection_message_count(self) -> int:
        """Selection messages if uplink and downlink each ran their own round."""
        return 2 * self.selection_message_count()

    def to_document(self) -> str:
        d = self.decision
        doc = {
            "gamma_set": list(self.gamma_set),
            "sigma_set": list(self.sigma_set),
            "threshold_gth1_w": self.threshold_gth1,
            "threshold_gth2_w": {str(k): v for k, v in sorted(self.threshold_gth2.items())},
            "decision": {
                "mode": d.mode,
                "relay_index": d.relay_index,
                "energy_j_per_bit": d.energy_per_bit if d.energy_report else None,
            },
            "messages": [m.to_record() for m in self.message_log],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _relay(i: int) -> str:
    return f"R{i}"


def candidate_set_gamma(link_state: LinkState, rate_r: float, params: SystemParams) -> Tuple[int, ...]:
    """Relays whose MS link supports the 2R hop at full power."""
    g_th1 = rate_factor_f(2 * rate_r, params)
    budget = params.p_max - params.p_c
    return tuple(int(i) for i in np.flatnonzero(budget * link_state.h1 >= g_th1))


def threshold_gth2(i: int, link_state: LinkState, rate_r: float, params: SystemParams) -> float:
    # floored at 0: a direct link stronger than h1 needs no relay contribution
    h1 = link_state.h1[i]
    return float(rate_factor_f(2 * rate_r, params) * max(0.0, 1.0 - link_state.h_direct / h1))


def candidate_set_sigma(gamma, link_state: LinkState, rate_r: float,
                        params: SystemParams) -> Tuple[int, ...]:
    """Members of ``gamma`` whose BS link can deliver the relay's share."""
    budget = params.p_max - params.p_c
    return tuple(i for i in gamma
                 if budget * link_state.h2[i] >= threshold_gth2(i, link_state, rate_r, params))


def run_judrs_on_links(link_state: LinkState, zeta: float, rate_r: float,
                       params: SystemParams) -> ProtocolTrace:
    """Run the handshake on a given channel realisation."""
    n = link_state.relay_count
    relays = tuple(_relay(i) for i in range(n))
    budget = params.p_max - params.p_c
    g1 = float(rate_factor_f(2 * rate_r, params))
    log = [Message(1, "MS", relays + ("BS",), {"packet": "RTS1", "tx_power_w": budget})]

    gamma = candidate_set_gamma(link_state, rate_r, params)
    for i in gamma:
        log.append(Message(2, _relay(i), ("BS",),
                           {"packet": "RTS2", "tx_power_w": budget, "cqi_h1": float(link_state.h1[i])}))

    gth2 = {i: threshold_gth2(i, link_state, rate_r, params) for i in gamma}
    sigma = candidate_set_sigma(gamma, link_state, rate_r, params)
    log.append(Message(3, "BS", (), {"action": "form_candidate_set", "sigma": list(sigma)}))

    candidates = [CandidateRelay(i, float(link_state.h1[i]), float(link_state.h2[i])) for i in sigma]
    decision = min_energy_select(candidates, link_state.h_direct, zeta, rate_r, params)
    announce = {"packet": "SELECT", "mode": decision.mode, "relay_index": decision.relay_index,
                "h_direct": link_state.h_direct}
    log.append(Message(4, "BS", ("MS",) + relays, announce))

    if decision.mode == COOPERATIVE:
        r = _relay(decision.relay_index)
        lp = decision.energy_report.link_powers
        log.append(Message(5, "MS", (r, "BS"), {"data": "uplink", "tx_power_w": lp.p_ms_uplink}))
        log.append(Message(5, r, ("BS",), {"data": "uplink_relay", "tx_power_w": lp.p_relay_uplink}))
        log.append(Message(5, "BS", (r, "MS"), {"data": "downlink"}))
        log.append(Message(5, r, ("MS",), {"data": "downlink_relay", "tx_power_w": lp.p_relay_downlink}))
    elif decision.mode == DIRECT:
        log.append(Message(5, "MS", ("BS",), {"data": "uplink_direct"}))
        log.append(Message(5, "BS", ("MS",), {"data": "downlink_direct"}))

    return ProtocolTrace(gamma, sigma, g1, gth2, decision, tuple(log), link_state)


def run_judrs(scenario: Scenario, rng: Optional[np.random.Generator] = None) -> ProtocolTrace:
    """Realise the scenario's channels and run the handshake once."""
    links = scenario.realize(rng)
    return run_judrs_on_links(links, scenario.zeta, scenario.rate_r, scenario.params)
