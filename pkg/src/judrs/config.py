"""Experiment configuration: parsing, defaults and validation.

Configs are YAML (or JSON) mappings. Absent fields take the defaults of the selected experiment; unknown
fields are rejected.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import yaml

from .core_model import DEFAULT_PARAMS_DB, DomainError, SystemParams, dbm_to_watt

EXPERIMENTS = ("select", "region", "optimal-location", "relay-sweep", "traffic-sweep", "dmt")
STOCHASTIC = {"relay-sweep", "traffic-sweep", "dmt"}

TOP_KEYS = {"experiment", "seed", "trials", "rate_r", "zeta", "relay_counts", "workers",
            "params", "geometry", "grid", "contour_levels", "dmt", "output"}
GEOMETRY_KEYS = {"d_ms_bs", "direct_link", "relay_disc_factor", "relay_positions", "fading"}
GRID_KEYS = {"nx", "ny", "x_min", "x_max", "y_min", "y_max"}
DMT_KEYS = {"rho_db", "multiplexing_r", "fixed_rate", "mode", "block_size"}
OUTPUT_KEYS = {"path", "format"}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class DmtSettings:
    rho_db: Tuple[float, ...] = (10.0, 15.0, 20.0, 25.0)
    multiplexing_r: float = 0.0
    fixed_rate: Optional[float] = 1.0
    mode: str = "capacity"
    block_size: int = 1 << 17


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: SystemParams
    params_override: Dict[str, float]
    d_ms_bs: Tuple[float, ...]
    direct_link: Tuple[bool, ...]
    relay_disc_factor: float
    relay_positions: Optional[Tuple[Tuple[float, float], ...]]
    fading: bool
    zeta: Tuple[float, ...]
    rate_r: float
    relay_counts: Tuple[int, ...]
    trials: int
    seed: Optional[int]
    workers: int
    grid: Optional[Dict[str, float]]
    contour_levels: Tuple[float, ...]
    dmt: DmtSettings
    output_path: Optional[str] = None
    output_format: str = "table"

    def resolved(self) -> Dict[str, Any]:
        """Canonical dict of everything that determines the results."""
        d = asdict(self)
        d.pop("params")
        d.pop("output_path")
        d.pop("output_format")
        d.pop("workers")
        d["params_db"] = {k: self.params_override.get(k, v) for k, v in DEFAULT_PARAMS_DB.items()}
        d.pop("params_override")
        return _jsonable(d)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


_DEFAULTS = {
    "select": dict(d_ms_bs=[500.0], direct_link=[True], zeta=[0.5], relay_counts=[8], trials=1),
    "region": dict(d_ms_bs=[500.0], direct_link=[True], zeta=[0.2, 0.5, 0.8], relay_counts=[0], trials=1),
    "optimal-location": dict(d_ms_bs=[500.0], direct_link=[True], zeta=[0.2, 0.5, 0.8],
                             relay_counts=[0], trials=1),
    "relay-sweep": dict(d_ms_bs=[450.0, 1200.0], direct_link=[True, False], zeta=[0.5],
                        relay_counts=[1, 2, 3, 4, 5, 6, 7, 8], trials=10000),
    "traffic-sweep": dict(d_ms_bs=[450.0], direct_link=[True], zeta=[0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
                          relay_counts=[8], trials=10000),
    "dmt": dict(d_ms_bs=[500.0], direct_link=[True], zeta=[0.5], relay_counts=[0, 1], trials=1000000),
}


def _check_keys(section: Dict[str, Any], allowed, prefix: str):
    if not isinstance(section, dict):
        raise ConfigError(prefix or "<root>", "expected a mapping")
    for k in section:
        if k not in allowed:
            raise ConfigError(f"{prefix}.{k}" if prefix else str(k), "unknown field")


def _number(value, path, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    v = int(value) if integer else float(value)
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None and v > hi:
        raise ConfigError(path, f"must be <= {hi}, got {value!r}")
    return v


def _list(value, path):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _build_params(overrides: Dict[str, Any]) -> SystemParams:
    _check_keys(overrides, set(DEFAULT_PARAMS_DB), "params")
    vals = dict(DEFAULT_PARAMS_DB)
    for k, v in overrides.items():
        vals[k] = _number(v, f"params.{k}")
    if dbm_to_watt(vals["p_c_dbm"]) >= dbm_to_watt(vals["p_max_dbm"]):
        raise ConfigError("params.p_c_dbm", "circuit power must be below params.p_max_dbm")
    try:
        return SystemParams.from_db(**vals)
    except DomainError as exc:
        raise ConfigError("params", str(exc)) from exc


def build_config(doc: Optional[Dict[str, Any]], **cli) -> ExperimentConfig:
    """Validate a parsed config mapping; ``cli`` entries (not None) override it."""
    doc = dict(doc or {})
    _check_keys(doc, TOP_KEYS, "")
    for k, v in cli.items():
        if v is None:
            continue
        if k in ("d_ms_bs", "relay_disc_factor", "fading"):
            doc.setdefault("geometry", {})
            doc["geometry"] = dict(doc["geometry"], **{k: v})
        elif k in ("output_path", "output_format"):
            doc.setdefault("output", {})
            doc["output"] = dict(doc["output"], **{k.split("_")[1]: v})
        elif k == "params":
            doc["params"] = dict(doc.get("params") or {}, **v)
        else:
            doc[k] = v

    exp = doc.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {exp!r}")
    defaults = _DEFAULTS[exp]

    overrides = doc.get("params") or {}
    params = _build_params(overrides)

    geo = doc.get("geometry") or {}
    _check_keys(geo, GEOMETRY_KEYS, "geometry")
    d_list = [_number(d, f"geometry.d_ms_bs[{i}]", lo=0, lo_open=True)
              for i, d in enumerate(_list(geo.get("d_ms_bs", defaults["d_ms_bs"]), "geometry.d_ms_bs"))]
    direct = _list(geo.get("direct_link", defaults["direct_link"] if "d_ms_bs" not in geo else True),
                   "geometry.direct_link")
    if len(direct) == 1 and len(d_list) > 1:
        direct = direct * len(d_list)
    if len(direct) != len(d_list):
        raise ConfigError("geometry.direct_link", "needs one entry per distance in geometry.d_ms_bs")
    for i, b in enumerate(direct):
        if not isinstance(b, bool):
            raise ConfigError(f"geometry.direct_link[{i}]", "expected true/false")
    disc = _number(geo.get("relay_disc_factor", 1.2), "geometry.relay_disc_factor", lo=0, lo_open=True)
    fading = geo.get("fading", True)
    if not isinstance(fading, bool):
        raise ConfigError("geometry.fading", "expected true/false")
    positions = None
    if "relay_positions" in geo:
        positions = []
        for i, p in enumerate(_list(geo["relay_positions"], "geometry.relay_positions")):
            if not isinstance(p, (list, tuple)) or len(p) != 2:
                raise ConfigError(f"geometry.relay_positions[{i}]", "expected [x_m, y_m]")
            positions.append((_number(p[0], f"geometry.relay_positions[{i}][0]"),
                              _number(p[1], f"geometry.relay_positions[{i}][1]")))
        positions = tuple(positions)

    zetas = [_number(z, f"zeta[{i}]", lo=0, hi=1)
             for i, z in enumerate(_list(doc.get("zeta", defaults["zeta"]), "zeta"))]
    if not zetas:
        raise ConfigError("zeta", "needs at least one value")
    rate = _number(doc.get("rate_r", 3.0), "rate_r", lo=0, lo_open=True)
    counts = [_number(n, f"relay_counts[{i}]", lo=0, integer=True)
              for i, n in enumerate(_list(doc.get("relay_counts", defaults["relay_counts"]), "relay_counts"))]
    trials = _number(doc.get("trials", defaults["trials"]), "trials", lo=1, integer=True)
    workers = _number(doc.get("workers", 1), "workers", lo=1, integer=True)

    seed = doc.get("seed")
    stochastic = exp in STOCHASTIC or (exp == "select" and fading)
    if seed is None and stochastic:
        raise ConfigError("seed", f"required for the stochastic experiment {exp!r}")
    if seed is not None:
        seed = _number(seed, "seed", lo=0, hi=2 ** 64 - 1, integer=True)

    grid = None
    if "grid" in doc:
        g = doc["grid"] or {}
        _check_keys(g, GRID_KEYS, "grid")
        grid = {}
        for k in sorted(g):
            if k in ("nx", "ny"):
                grid[k] = _number(g[k], f"grid.{k}", lo=2, integer=True)
            else:
                grid[k] = _number(g[k], f"grid.{k}")
        for lo_k, hi_k in (("x_min", "x_max"), ("y_min", "y_max")):
            if lo_k in grid and hi_k in grid and not grid[hi_k] > grid[lo_k]:
                raise ConfigError(f"grid.{hi_k}", f"must exceed grid.{lo_k}")

    levels = tuple(_number(v, f"contour_levels[{i}]")
                   for i, v in enumerate(_list(doc.get("contour_levels", [0.0]), "contour_levels")))

    ds = doc.get("dmt") or {}
    _check_keys(ds, DMT_KEYS, "dmt")
    base = DmtSettings()
    rho_db = tuple(_number(v, f"dmt.rho_db[{i}]") for i, v in enumerate(_list(ds.get("rho_db", base.rho_db), "dmt.rho_db")))
    if any(b <= a for a, b in zip(rho_db, rho_db[1:])):
        raise ConfigError("dmt.rho_db", "must be strictly increasing")
    fixed = ds.get("fixed_rate", base.fixed_rate)
    if fixed is not None:
        fixed = _number(fixed, "dmt.fixed_rate", lo=0, lo_open=True)
    mode = ds.get("mode", base.mode)
    if mode not in ("capacity", "mqam"):
        raise ConfigError("dmt.mode", "must be 'capacity' or 'mqam'")
    dmt = DmtSettings(rho_db, _number(ds.get("multiplexing_r", base.multiplexing_r), "dmt.multiplexing_r", lo=0),
                      fixed, mode, _number(ds.get("block_size", base.block_size), "dmt.block_size", lo=1, integer=True))

    out = doc.get("output") or {}
    _check_keys(out, OUTPUT_KEYS, "output")
    fmt = out.get("format", "table")
    if fmt not in ("table", "document"):
        raise ConfigError("output.format", "must be 'table' or 'document'")

    return ExperimentConfig(
        experiment=exp, params=params, params_override=dict(sorted(overrides.items())),
        d_ms_bs=tuple(d_list), direct_link=tuple(direct), relay_disc_factor=disc,
        relay_positions=positions, fading=fading, zeta=tuple(zetas), rate_r=rate,
        relay_counts=tuple(counts), trials=trials, seed=seed, workers=workers, grid=grid,
        contour_levels=levels, dmt=dmt, output_path=out.get("path"), output_format=fmt,
    )


def parse_config(document: str, **cli) -> ExperimentConfig:
    """Parse a YAML/JSON document into a validated :class:`ExperimentConfig`."""
    try:
        doc = yaml.safe_load(document) if document and document.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"malformed document: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a mapping")
    return build_config(doc, **cli)
