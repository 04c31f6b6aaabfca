"""Energy per information bit of the battery-powered terminals (MS and relay).

Relayed transmission occupies two phases at spectral efficiency 2R each, so
the hop power requirement is ``F(2R) / h``. The relay's contribution shrinks
by the share the direct link already delivers to the combiner; when the
direct link alone meets the target that contribution is zero, never
negative. Base-station energy is not counted.

Functions broadcast over numpy arrays of gains.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_model import DomainError, SystemParams
from .link_budget import coded_power, rate_factor_f


@dataclass(frozen=True)
class LinkPowers:
    """Transmit powers (W) of the MS and the selected relay."""

    p_ms_uplink: float
    p_relay_uplink: float
    p_relay_downlink: float

    def total_with_circuit(self, p_c: float):
        return (self.p_ms_uplink + p_c, self.p_relay_uplink + p_c, self.p_relay_downlink + p_c)


@dataclass(frozen=True)
class EnergyReport:
    energy_per_bit: float  # J/bit, MS + relay
    mode: str  # "cooperative" | "direct"
    ms_energy_per_bit: float
    relay_uplink_energy_per_bit: float = 0.0
    relay_downlink_energy_per_bit: float = 0.0
    link_powers: Optional[LinkPowers] = None
    relay_index: Optional[int] = None

    @property
    def relay_energy_per_bit(self) -> float:
        return self.relay_uplink_energy_per_bit + self.relay_downlink_energy_per_bit


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _gains(*hs):
    out = []
    for h in hs:
        h = np.asarray(h, dtype=float)
        if np.any(~(h > 0)):
            raise DomainError("channel gains must be > 0")
        out.append(h)
    return out


def _check_zeta_rate(zeta, rate_r):
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0) or np.any(zeta > 1):
        raise DomainError("zeta must lie in [0, 1]")
    if not rate_r > 0:
        raise DomainError("spectral efficiency must be > 0")
    return zeta


def _relay_powers(h1, h2, h_d, f2r):
    p_ms_ul = f2r / h1
    p_relay_ul = f2r * np.maximum(0.0, 1.0 - h_d / h1) / h2
    p_relay_dl = f2r * np.maximum(0.0, 1.0 - h_d / h2) / h1
    return p_ms_ul, p_relay_ul, p_relay_dl


def relay_link_powers(h1, h2, h_d, rate_r, params: SystemParams) -> LinkPowers:
    """MS uplink, relay uplink and relay downlink transmit powers."""
    h1, h2 = _gains(h1, h2)
    h_d = np.asarray(h_d, dtype=float)
    if np.any(h_d < 0):
        raise DomainError("direct gain must be >= 0")
    if not rate_r > 0:
        raise DomainError("spectral efficiency must be > 0")
    powers = _relay_powers(h1, h2, h_d, rate_factor_f(2 * rate_r, params))
    return LinkPowers(*(_out(p) for p in powers))


def coop_energy_components(h1, h2, h_d, zeta, rate_r, params: SystemParams):
    """``(ms, relay_uplink, relay_downlink)`` energy per bit in J/bit.

    Each phase of the uplink lasts half the bit time of a direct
    transmission, and both MS and relay draw circuit power during the uplink.
    """
    zeta = _check_zeta_rate(zeta, rate_r)
    h1, h2 = _gains(h1, h2)
    h_d = np.asarray(h_d, dtype=float)
    if np.any(h_d < 0):
        raise DomainError("direct gain must be >= 0")
    p_ms_ul, p_relay_ul, p_relay_dl = _relay_powers(h1, h2, h_d, rate_factor_f(2 * rate_r, params))
    denom = 2.0 * rate_r * params.bandwidth_b
    ms = zeta * (p_ms_ul + params.p_c) / denom
    relay_ul = zeta * (p_relay_ul + params.p_c) / denom
    relay_dl = (1.0 - zeta) * (p_relay_dl + params.p_c) / denom
    return _out(ms), _out(relay_ul), _out(relay_dl)


def coop_energy_per_bit(h1, h2, h_d, zeta, rate_r, params: SystemParams):
    """Total MS + relay energy per bit (J/bit) when relaying via one relay."""
    ms, rul, rdl = coop_energy_components(h1, h2, h_d, zeta, rate_r, params)
    return _out(np.asarray(ms) + rul + rdl)


def coop_energy_per_bit_closed_form(h1, h2, h_d, zeta, rate_r, params: SystemParams):
    """Collapsed closed form of :func:`coop_energy_per_bit`.

    Valid only while no relay power clamps, i.e. ``h_d <= min(h1, h2)``;
    outside that range it under-counts and can even go negative.
    """
    zeta = _check_zeta_rate(zeta, rate_r)
    h1, h2 = _gains(h1, h2)
    h_d = np.asarray(h_d, dtype=float)
    denom = 2.0 * rate_r * params.bandwidth_b
    f2r = rate_factor_f(2 * rate_r, params)
    return _out(f2r / denom * (1.0 / h1 + zeta / h2 - h_d / (h1 * h2))
                + (1.0 + zeta) * params.p_c / denom)


def direct_energy_per_bit(h_d, zeta, rate_r, params: SystemParams):
    """MS energy per bit (J/bit) of single-hop transmission at rate R."""
    zeta = _check_zeta_rate(zeta, rate_r)
    (h_d,) = _gains(h_d)
    p_t = coded_power(rate_r, params.target_ber_pe, h_d, params)
    return _out(zeta * (p_t + params.p_c) / (rate_r * params.bandwidth_b))


def direct_feasible(h_d, rate_r, params: SystemParams):
    """Whether the MS can reach rate R directly within its power budget."""
    p_t = coded_power(rate_r, params.target_ber_pe, h_d, params)
    return p_t + params.p_c <= params.p_max


def cooperation_gain(h1, h2, h_d, zeta, rate_r, params: SystemParams):
    """Fractional energy saving of relaying over direct transmission.

    Negative when relaying costs more. Undefined for ``zeta == 0``, where the
    MS spends nothing on direct transmission.
    """
    zeta_arr = np.asarray(zeta, dtype=float)
    if np.any(zeta_arr <= 0):
        raise DomainError("cooperation gain is undefined for zeta = 0")
    e_direct = np.asarray(direct_energy_per_bit(h_d, zeta, rate_r, params))
    e_coop = np.asarray(coop_energy_per_bit(h1, h2, h_d, zeta, rate_r, params))
    return _out((e_direct - e_coop) / e_direct)


def coop_report(h1, h2, h_d, zeta, rate_r, params: SystemParams, relay_index=None) -> EnergyReport:
    ms, rul, rdl = coop_energy_components(h1, h2, h_d, zeta, rate_r, params)
    return EnergyReport(
        energy_per_bit=ms + rul + rdl,
        mode="cooperative",
        ms_energy_per_bit=ms,
        relay_uplink_energy_per_bit=rul,
        relay_downlink_energy_per_bit=rdl,
        link_powers=relay_link_powers(h1, h2, h_d, rate_r, params),
        relay_index=relay_index,
    )


def direct_report(h_d, zeta, rate_r, params: SystemParams) -> EnergyReport:
    e = direct_energy_per_bit(h_d, zeta, rate_r, params)
    return EnergyReport(energy_per_bit=e, mode="direct", ms_energy_per_bit=e)
