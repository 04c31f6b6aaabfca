"""System constants, geometry, traffic profile and channel-gain generation.

All arithmetic is carried out in linear SI units (W, Hz, m). Decibel values
appear only in :meth:`SystemParams.from_db` and :meth:`SystemParams.to_db`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

Point = Tuple[float, float]

# pathloss constant K is referenced to 1 km
REFERENCE_DISTANCE_M = 1000.0


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a model formula."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


# reference system parameters, in the units they are usually quoted in
DEFAULT_PARAMS_DB = {
    "p_max_dbm": 33.0,
    "k_db": -128.1,
    "bandwidth_hz": 180e3,
    "carrier_hz": 2.0e9,
    "n0_dbm_hz": -171.0,
    "pathloss_exponent": 3.76,
    "coding_gain_db": 4.7,
    "code_rate": 2.0 / 3.0,
    "target_ber": 1e-4,
    "p_c_dbm": 20.0,
}


@dataclass(frozen=True)
class SystemParams:
    """Physical-layer constants in linear units.

    Use :meth:`from_db` (or :meth:`defaults`) to build from the dB/dBm
    quantities a link budget is usually written in.
    """

    p_max: float  # W
    p_c: float  # W, circuit power
    k_gain: float  # linear pathloss constant at 1 km
    bandwidth_b: float  # Hz
    carrier_fc: float  # Hz
    noise_n0: float  # W/Hz
    pathloss_p: float
    coding_gain_gc: float  # linear
    code_rate_etac: float
    target_ber_pe: float

    def __post_init__(self):
        positive = ("p_max", "p_c", "k_gain", "bandwidth_b", "carrier_fc",
                    "noise_n0", "pathloss_p", "coding_gain_gc")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        if not 0 < self.target_ber_pe < 1:
            raise DomainError(f"target_ber_pe must lie in (0, 1), got {self.target_ber_pe!r}")
        if not 0 < self.code_rate_etac <= 1:
            raise DomainError(f"code_rate_etac must lie in (0, 1], got {self.code_rate_etac!r}")
        if not self.p_c < self.p_max:
            raise DomainError(
                f"p_c ({self.p_c!r} W) must be below p_max ({self.p_max!r} W)")

    @classmethod
    def from_db(cls, p_max_dbm, k_db, bandwidth_hz, carrier_hz, n0_dbm_hz,
                pathloss_exponent, coding_gain_db, code_rate, target_ber, p_c_dbm):
        return cls(
            p_max=dbm_to_watt(p_max_dbm),
            p_c=dbm_to_watt(p_c_dbm),
            k_gain=db_to_linear(k_db),
            bandwidth_b=float(bandwidth_hz),
            carrier_fc=float(carrier_hz),
            noise_n0=dbm_to_watt(n0_dbm_hz),
            pathloss_p=float(pathloss_exponent),
            coding_gain_gc=db_to_linear(coding_gain_db),
            code_rate_etac=float(code_rate),
            target_ber_pe=float(target_ber),
        )

    @classmethod
    def defaults(cls, **overrides) -> "SystemParams":
        values = dict(DEFAULT_PARAMS_DB)
        unknown = set(overrides) - set(values)
        if unknown:
            raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
        values.update(overrides)
        return cls.from_db(**values)

    def to_db(self) -> dict:
        return {
            "p_max_dbm": watt_to_dbm(self.p_max),
            "k_db": linear_to_db(self.k_gain),
            "bandwidth_hz": self.bandwidth_b,
            "carrier_hz": self.carrier_fc,
            "n0_dbm_hz": watt_to_dbm(self.noise_n0),
            "pathloss_exponent": self.pathloss_p,
            "coding_gain_db": linear_to_db(self.coding_gain_gc),
            "code_rate": self.code_rate_etac,
            "target_ber": self.target_ber_pe,
            "p_c_dbm": watt_to_dbm(self.p_c),
        }

    @property
    def noise_power(self) -> float:
        """N0*B in W."""
        return self.noise_n0 * self.bandwidth_b


@dataclass(frozen=True)
class TrafficProfile:
    """Uplink share ``zeta`` of the total traffic load."""

    zeta: float
    l_uplink: Optional[float] = None
    l_downlink: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise DomainError(f"zeta must lie in [0, 1], got {self.zeta!r}")
        if (self.l_uplink is None) != (self.l_downlink is None):
            raise DomainError("l_uplink and l_downlink must be given together")
        if self.l_uplink is not None:
            if self.l_uplink < 0 or self.l_downlink < 0 or self.l_total <= 0:
                raise DomainError("traffic loads must be >= 0 with a positive total")
            if not math.isclose(self.zeta, self.l_uplink / self.l_total, rel_tol=1e-12, abs_tol=1e-15):
                raise DomainError("zeta is inconsistent with the traffic loads")

    @classmethod
    def from_loads(cls, l_uplink: float, l_downlink: float) -> "TrafficProfile":
        total = l_uplink + l_downlink
        if total <= 0:
            raise DomainError("total traffic load must be > 0")
        return cls(zeta=l_uplink / total, l_uplink=l_uplink, l_downlink=l_downlink)

    @property
    def l_total(self) -> Optional[float]:
        if self.l_uplink is None:
            return None
        return self.l_uplink + self.l_downlink


def _distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Geometry:
    """Planar node layout in metres."""

    ms_position: Point = (0.0, 0.0)
    bs_position: Point = (500.0, 0.0)
    relay_positions: Tuple[Point, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ms_position", tuple(map(float, self.ms_position)))
        object.__setattr__(self, "bs_position", tuple(map(float, self.bs_position)))
        object.__setattr__(self, "relay_positions",
                           tuple(tuple(map(float, r)) for r in self.relay_positions))
        if not self.d_ms_bs > 0:
            raise DomainError("MS and BS must not coincide")
        for j, r in enumerate(self.relay_positions):
            if _distance(r, self.ms_position) <= 0 or _distance(r, self.bs_position) <= 0:
                raise DomainError(f"relay {j} coincides with the MS or the BS")

    @classmethod
    def collinear(cls, d_ms_bs: float, relay_offsets: Sequence[float] = ()) -> "Geometry":
        """MS at the origin, BS at ``(d_ms_bs, 0)``, relays on the axis."""
        return cls((0.0, 0.0), (float(d_ms_bs), 0.0), tuple((float(x), 0.0) for x in relay_offsets))

    @property
    def d_ms_bs(self) -> float:
        return _distance(self.ms_position, self.bs_position)

    @property
    def relay_count(self) -> int:
        return len(self.relay_positions)

    def relay_distances(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(d1, d2)``: MS-relay and relay-BS distances."""
        if not self.relay_positions:
            return np.empty(0), np.empty(0)
        pos = np.asarray(self.relay_positions, dtype=float)
        d1 = np.hypot(pos[:, 0] - self.ms_position[0], pos[:, 1] - self.ms_position[1])
        d2 = np.hypot(pos[:, 0] - self.bs_position[0], pos[:, 1] - self.bs_position[1])
        return d1, d2


@dataclass(frozen=True)
class LinkState:
    """Channel power gains of one realisation; one gain per reciprocal link."""

    h1: np.ndarray
    h2: np.ndarray
    h_direct: float
    fading_v: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        h1 = np.asarray(self.h1, dtype=float).reshape(-1)
        h2 = np.asarray(self.h2, dtype=float).reshape(-1)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "h_direct", float(self.h_direct))
        if h1.shape != h2.shape:
            raise DomainError("h1 and h2 must have one entry per relay")
        if np.any(h1 <= 0) or np.any(h2 <= 0) or not self.h_direct > 0:
            raise DomainError("channel gains must be > 0")
        if self.fading_v is not None:
            v = np.asarray(self.fading_v, dtype=float)
            object.__setattr__(self, "fading_v", v)
            if v.shape[-1] != h1.shape[0]:
                raise DomainError("fading_v must have one column per relay")

    @property
    def relay_count(self) -> int:
        return int(self.h1.shape[0])

    def __eq__(self, other):
        if not isinstance(other, LinkState):
            return NotImplemented
        return (np.array_equal(self.h1, other.h1) and np.array_equal(self.h2, other.h2)
                and self.h_direct == other.h_direct)

    __hash__ = None


def pathloss_gain(d, params: SystemParams):
    """Mean channel power gain ``K * (d / 1 km) ** -p`` at distance ``d`` metres."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(~(d_arr > 0)):
        raise DomainError("distance must be > 0")
    gain = params.k_gain * (d_arr / REFERENCE_DISTANCE_M) ** (-params.pathloss_p)
    return float(gain) if gain.ndim == 0 else gain


def sample_fading(rng: np.random.Generator, size=None):
    """Unit-mean exponential power fading (Rayleigh amplitude)."""
    return rng.standard_exponential(size)


def realize_links(geometry: Geometry, params: SystemParams, fading: bool = True,
                  rng: Optional[np.random.Generator] = None) -> LinkState:
    """Draw one channel realisation for ``geometry``.

    Fading draws are taken in the order ``[h1 links..., h2 links..., direct]``.
    With ``fading=False`` the result is a pure function of the geometry.
    """
    d1, d2 = geometry.relay_distances()
    n = geometry.relay_count
    h1 = pathloss_gain(d1, params) if n else np.empty(0)
    h2 = pathloss_gain(d2, params) if n else np.empty(0)
    hd = pathloss_gain(geometry.d_ms_bs, params)
    if not fading:
        return LinkState(h1, h2, hd)
    if rng is None:
        raise ValueError("an rng is required when fading is on")
    v = sample_fading(rng, 2 * n + 1)
    return LinkState(h1 * v[:n], h2 * v[n:2 * n], hd * v[2 * n],
                     fading_v=np.vstack([v[:n], v[n:2 * n]]))


@dataclass(frozen=True)
class Scenario:
    """One MS-BS pair with its candidate relays and traffic requirements.

    ``direct_gain_scale`` multiplies the MS-BS gain; a tiny value models a
    blocked direct link while keeping direct-transmission energy finite.
    """

    geometry: Geometry
    traffic: TrafficProfile
    rate_r: float = 3.0
    params: SystemParams = field(default_factory=SystemParams.defaults)
    fading: bool = True
    direct_gain_scale: float = 1.0

    def __post_init__(self):
        if not self.rate_r > 0:
            raise DomainError("spectral efficiency must be > 0")
        if not self.direct_gain_scale > 0:
            raise DomainError("direct_gain_scale must be > 0")

    @property
    def zeta(self) -> float:
        return self.traffic.zeta

    def realize(self, rng: Optional[np.random.Generator] = None) -> LinkState:
        links = realize_links(self.geometry, self.params, self.fading, rng)
        if self.direct_gain_scale == 1.0:
            return links
        return LinkState(links.h1, links.h2, links.h_direct * self.direct_gain_scale, links.fading_v)
