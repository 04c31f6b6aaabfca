"""Tabular experiment output with a provenance header."""
from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from . import __version__

TABLE, DOCUMENT = "table", "document"


def config_hash(resolved: Dict[str, Any]) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serialisable: {type(v).__name__}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


@dataclass
class ResultTable:
    """Rows of one experiment.

    ``units`` runs parallel to ``columns``; ``"1"`` marks dimensionless and
    ``"-"`` categorical columns.
    """

    columns: List[str]
    units: List[str]
    rows: List[Sequence[Any]]
    provenance: Dict[str, Any] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("every column needs a unit")
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row width does not match the columns")

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def select(self, **match) -> List[dict]:
        out = []
        for r in self.rows:
            rec = dict(zip(self.columns, r))
            if all(rec[k] == v for k, v in match.items()):
                out.append(rec)
        return out

    def to_table(self) -> str:
        buf = io.StringIO()
        for k in sorted(self.provenance):
            buf.write(f"# {k}: {_fmt(self.provenance[k])}\n")
        if self.summary:
            buf.write(f"# summary: {json.dumps(self.summary, sort_keys=True, default=_json_default)}\n")
        buf.write("# units: " + ",".join(self.units) + "\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def to_document(self) -> str:
        doc = {
            "provenance": self.provenance,
            "summary": self.summary,
            "columns": [{"name": c, "unit": u} for c, u in zip(self.columns, self.units)],
            "rows": [list(r) for r in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True, default=_json_default) + "\n"

    def render(self, fmt: str = TABLE) -> str:
        if fmt == TABLE:
            return self.to_table()
        if fmt == DOCUMENT:
            return self.to_document()
        raise ValueError(f"unknown output format {fmt!r}")


def make_provenance(experiment: str, resolved: Dict[str, Any], seed) -> Dict[str, Any]:
    return {"experiment": experiment, "config_hash": config_hash(resolved),
            "seed": seed, "version": __version__}
