"""Energy-efficient joint uplink/downlink relay selection (JUDRS) simulator."""

__version__ = "0.1.0"

from .core_model import (DomainError, Geometry, LinkState, Scenario, SystemParams,  # noqa: E402
                         TrafficProfile, pathloss_gain, realize_links, sample_fading)
from .relay_selection import (CandidateRelay, SelectionDecision, min_energy_select,  # noqa: E402
                              best_harmonic_mean_select, best_worst_channel_select)
from .protocol import run_judrs  # noqa: E402

__all__ = [
    "DomainError", "Geometry", "LinkState", "Scenario", "SystemParams", "TrafficProfile",
    "pathloss_gain", "realize_links", "sample_fading", "CandidateRelay", "SelectionDecision",
    "min_energy_select", "best_harmonic_mean_select", "best_worst_channel_select", "run_judrs",
]
