"""Cooperation energy gain over the plane, cooperation regions and the best relay spot.

The MS sits at the origin and the BS at ``(D, 0)``; fading is ignored, so
every gain is the distance-dependent mean :func:`pathloss_gain`.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .core_model import DomainError, SystemParams, pathloss_gain
from .energy_model import cooperation_gain


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 201
    ny: int = 201

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise DomainError("grid needs at least 2 points per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DomainError("grid extents must be non-empty")

    @classmethod
    def around_link(cls, d_ms_bs: float, n: int = 201) -> "GridSpec":
        """Square ``[-0.6 D, 1.6 D]^2`` window around the MS-BS link."""
        return cls(-0.6 * d_ms_bs, 1.6 * d_ms_bs, -0.6 * d_ms_bs, 1.6 * d_ms_bs, n, n)

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.x_min, self.x_max, self.nx), np.linspace(self.y_min, self.y_max, self.ny)


def _distances(x, y, d_ms_bs):
    return np.hypot(x, y), np.hypot(np.asarray(x, dtype=float) - d_ms_bs, y)


def energy_saving_map(x, y, d_ms_bs: float, zeta: float, rate_r: float, params: SystemParams):
    """Vectorised :func:`energy_saving_at`; NaN where a point hits the MS or BS."""
    d1, d2 = _distances(np.asarray(x, dtype=float), np.asarray(y, dtype=float), d_ms_bs)
    ok = (d1 > 0) & (d2 > 0)
    d1s, d2s = np.where(ok, d1, 1.0), np.where(ok, d2, 1.0)
    h1 = pathloss_gain(d1s, params)
    h2 = pathloss_gain(d2s, params)
    h_d = pathloss_gain(d_ms_bs, params)
    saving = np.asarray(cooperation_gain(h1, h2, h_d, zeta, rate_r, params), dtype=float)
    return np.where(ok, saving, np.nan)


def energy_saving_at(position: Sequence[float], d_ms_bs: float, zeta: float, rate_r: float,
                     params: SystemParams) -> float:
    """Cooperation energy gain for a relay at ``position`` (metres)."""
    d1, d2 = _distances(position[0], position[1], d_ms_bs)
    if not (d1 > 0 and d2 > 0):
        raise DomainError("relay position coincides with the MS or the BS")
    # same arithmetic path as the grid so cells re-evaluate bit-for-bit
    return float(energy_saving_map(np.array([position[0]], dtype=float),
                                   np.array([position[1]], dtype=float), d_ms_bs, zeta, rate_r, params)[0])


def h_factor(rate_r: float, params: SystemParams) -> float:
    """Direct coded transmit power per bit-rate, per unit ``D**p`` (J/bit/m^p)."""
    eta = params.code_rate_etac
    return (-2.0 * eta * params.noise_n0 * math.log(5.0 * params.target_ber_pe)
            * (2.0 ** (rate_r / eta) - 1.0)
            / (3.0 * params.coding_gain_gc * rate_r * params.k_gain * 1e3 ** params.pathloss_p))


def approx_energy_saving_at(d1_norm, d2_norm, zeta: float, rate_r: float, d_ms_bs: float,
                            params: SystemParams):
    """Closed-form energy gain in distances normalised by ``D``.

    Uses ``1 + sqrt(1 - Pe) ~ 2`` inside the hop power factor; the error is
    of order ``Pe / 4`` relative on the relayed transmit term.
    """
    d1 = np.asarray(d1_norm, dtype=float)
    d2 = np.asarray(d2_norm, dtype=float)
    if np.any(~(d1 > 0)) or np.any(~(d2 > 0)):
        raise DomainError("normalised distances must be > 0")
    if not 0 < zeta <= 1:
        raise DomainError("zeta must lie in (0, 1]")
    p = params.pathloss_p
    pe = params.target_ber_pe
    eta = params.code_rate_etac
    rb = rate_r * params.bandwidth_b
    h = h_factor(rate_r, params)
    a1, a2 = d1 ** p, d2 ** p
    shape = (zeta * a1 + zeta * np.maximum(0.0, 1.0 - a1) * a2
             + (1.0 - zeta) * np.maximum(0.0, 1.0 - a2) * a1)
    hop = (2.0 ** (rate_r / eta) + 1.0) * math.log(2.0 / (5.0 * pe)) / (-2.0 * math.log(5.0 * pe))
    circuit = params.p_c * d_ms_bs ** (-p) / rb
    num = zeta * h - h * hop * shape - (1.0 - zeta) * circuit / 2.0
    den = zeta * h + zeta * circuit
    out = num / den
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RegionGrid:
    spec: GridSpec
    values: np.ndarray = field(compare=False)  # shape (ny, nx), NaN on MS/BS
    zeta: float
    rate_r: float
    d_ms_bs: float

    def region_mask(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.values > 0

    def region_cells(self) -> int:
        return int(np.count_nonzero(self.region_mask()))

    def cell_area_m2(self) -> float:
        s = self.spec
        return (s.x_max - s.x_min) / (s.nx - 1) * (s.y_max - s.y_min) / (s.ny - 1)

    def region_area_m2(self) -> float:
        return self.region_cells() * self.cell_area_m2()

    def to_table(self) -> str:
        """Delimited text: header ``x_m,y_m,e_saving`` then one row per grid point."""
        xs, ys = self.spec.axes()
        buf = io.StringIO()
        buf.write("x_m,y_m,e_saving\n")
        for j, y in enumerate(ys):
            for i, x in enumerate(xs):
                buf.write(f"{float(x)!r},{float(y)!r},{float(self.values[j, i])!r}\n")
        return buf.getvalue()

    def contour_lines(self, levels: Sequence[float]) -> Dict[float, List[np.ndarray]]:
        """Polylines (arrays of ``(x, y)`` rows) of the saving surface at ``levels``."""
        import contourpy

        xs, ys = self.spec.axes()
        gen = contourpy.contour_generator(xs, ys, np.ma.masked_invalid(self.values),
                                          line_type=contourpy.LineType.Separate)
        return {float(lv): [np.asarray(seg) for seg in gen.lines(lv)] for lv in levels}

    def contour_listing(self, levels: Sequence[float]) -> str:
        """Text listing ``level,polyline,x_m,y_m`` of the contour polylines."""
        buf = io.StringIO()
        buf.write("level,polyline,x_m,y_m\n")
        for level, lines in self.contour_lines(levels).items():
            for k, seg in enumerate(lines):
                for x, y in seg:
                    buf.write(f"{level!r},{k},{float(x)!r},{float(y)!r}\n")
        return buf.getvalue()


def compute_region_grid(spec: GridSpec, d_ms_bs: float, zeta: float, rate_r: float,
                        params: SystemParams) -> RegionGrid:
    xs, ys = spec.axes()
    x, y = np.meshgrid(xs, ys)
    values = energy_saving_map(x, y, d_ms_bs, zeta, rate_r, params)
    return RegionGrid(spec, values, zeta, rate_r, d_ms_bs)


@dataclass(frozen=True)
class OptimalLocation:
    d1_norm: float
    d2_norm: float
    position: Tuple[float, float]
    e_saving: float
    coarse_best: float


def optimal_relay_location(d_ms_bs: float, zeta: float, rate_r: float, params: SystemParams,
                           coarse_n: int = 201, tol_m: float = 0.05) -> OptimalLocation:
    """Relay position maximising the cooperation energy gain.

    Coarse grid over the upper half-plane window (the surface is symmetric
    about the MS-BS axis), then compass search from the best grid point,
    halving the step until it drops below ``tol_m``.
    """
    if coarse_n < 101:
        raise ValueError("coarse grid must have at least 101 points per axis")
    spec = GridSpec(-0.6 * d_ms_bs, 1.6 * d_ms_bs, 0.0, 1.1 * d_ms_bs, coarse_n, coarse_n)
    grid = compute_region_grid(spec, d_ms_bs, zeta, rate_r, params)
    j, i = np.unravel_index(np.nanargmax(grid.values), grid.values.shape)
    xs, ys = spec.axes()
    x, y = float(xs[i]), float(ys[j])
    best = float(grid.values[j, i])
    coarse_best = best

    def f(px, py):
        v = energy_saving_map(px, py, d_ms_bs, zeta, rate_r, params)
        return -math.inf if np.isnan(v) else float(v)

    step = float(max(xs[1] - xs[0], ys[1] - ys[0]))
    while step >= tol_m:
        moved = False
        for dx, dy in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            v = f(x + dx, y + dy)
            if v > best:
                x, y, best, moved = x + dx, y + dy, v, True
                break
        if not moved:
            step /= 2.0

    d1 = math.hypot(x, y) / d_ms_bs
    d2 = math.hypot(x - d_ms_bs, y) / d_ms_bs
    return OptimalLocation(d1, d2, (x, y), best, coarse_best)
