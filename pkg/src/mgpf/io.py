"""CSV/JSON file contracts used by the command-line interface.

All readers validate headers and values up front and raise
:class:`ValidationError` with the file name and line number of the first
problem, so nothing is computed (or written) from a malformed input.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SITES_COLUMNS = ("site_id", "network_id", "x", "y")
MEASUREMENT_COLUMNS = ("site_id", "network_id", "timestamp", "reading", "rh", "temp", "weekend")
REFERENCE_COLUMNS = ("site_id", "timestamp", "value")
COLLOCATED_COLUMNS = ("timestamp", "reference", "reading", "rh", "temp", "weekend")
GRID_COLUMNS = ("grid_id", "x", "y")
TRUTH_COLUMNS = ("timestamp", "site_id", "value")
PREDICTION_COLUMNS = ("timestamp", "site_id", "kind", "network_id", "x", "y", "mean", "lower",
                      "upper")
REFERENCE_NETWORK = "reference"


class ValidationError(ValueError):
    """Input file or config does not meet its contract."""


def _rows(path, required: Sequence[str]):
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{path}: file not found")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValidationError(f"{path}:1: missing column(s) {missing}; header is {header}")
        for i, row in enumerate(reader, start=2):
            yield i, row


def _float(path, line, col, text, allow_blank=False, nonneg=False):
    text = (text or "").strip()
    if text == "":
        if allow_blank:
            return math.nan
        raise ValidationError(f"{path}:{line}: column {col!r} is blank")
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{path}:{line}: column {col!r} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{path}:{line}: column {col!r} is not finite: {text!r}")
    if nonneg and v < 0:
        raise ValidationError(f"{path}:{line}: column {col!r} must be >= 0, got {v}")
    return v


def _id(path, line, col, text):
    text = (text or "").strip()
    if not text:
        raise ValidationError(f"{path}:{line}: column {col!r} is blank")
    return text


@dataclass
class SiteTable:
    ids: list
    network: list
    coords: np.ndarray

    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.ids)}

    def of_network(self, net: str):
        idx = [i for i, n in enumerate(self.network) if n == net]
        return [self.ids[i] for i in idx], self.coords[idx]


def read_sites(path) -> SiteTable:
    ids, nets, xy = [], [], []
    seen = set()
    for line, row in _rows(path, SITES_COLUMNS):
        sid = _id(path, line, "site_id", row["site_id"])
        if sid in seen:
            raise ValidationError(f"{path}:{line}: duplicate site_id {sid!r}")
        seen.add(sid)
        ids.append(sid)
        nets.append(_id(path, line, "network_id", row["network_id"]))
        xy.append((_float(path, line, "x", row["x"]), _float(path, line, "y", row["y"])))
    if not ids:
        raise ValidationError(f"{path}: no sites")
    return SiteTable(ids, nets, np.array(xy, dtype=float))


@dataclass
class Measurement:
    site_id: str
    network_id: str
    timestamp: str
    reading: float
    covariates: dict


def read_measurements(path, sites: SiteTable | None = None) -> list[Measurement]:
    out = []
    idx = None if sites is None else sites.index()
    for line, row in _rows(path, MEASUREMENT_COLUMNS):
        sid = _id(path, line, "site_id", row["site_id"])
        net = _id(path, line, "network_id", row["network_id"])
        if idx is not None:
            if sid not in idx:
                raise ValidationError(f"{path}:{line}: unknown site_id {sid!r}")
            if sites.network[idx[sid]] != net:
                raise ValidationError(
                    f"{path}:{line}: site {sid!r} belongs to network {sites.network[idx[sid]]!r}")
        reading = _float(path, line, "reading", row["reading"], allow_blank=True)
        cov = {c: _float(path, line, c, row[c], allow_blank=True) for c in ("rh", "temp", "weekend")}
        out.append(Measurement(sid, net, _id(path, line, "timestamp", row["timestamp"]),
                               reading, cov))
    return out


def read_reference(path, sites: SiteTable | None = None) -> list[tuple[str, str, float]]:
    out = []
    idx = None if sites is None else sites.index()
    for line, row in _rows(path, REFERENCE_COLUMNS):
        sid = _id(path, line, "site_id", row["site_id"])
        if idx is not None and sid not in idx:
            raise ValidationError(f"{path}:{line}: unknown site_id {sid!r}")
        v = _float(path, line, "value", row["value"], allow_blank=True, nonneg=True)
        out.append((sid, _id(path, line, "timestamp", row["timestamp"]), v))
    return out


def read_collocated(path) -> dict:
    cols = {k: [] for k in COLLOCATED_COLUMNS}
    for line, row in _rows(path, COLLOCATED_COLUMNS):
        cols["timestamp"].append(_id(path, line, "timestamp", row["timestamp"]))
        cols["reference"].append(_float(path, line, "reference", row["reference"],
                                        allow_blank=True, nonneg=True))
        for c in ("reading", "rh", "temp", "weekend"):
            cols[c].append(_float(path, line, c, row[c], allow_blank=True))
    if not cols["timestamp"]:
        raise ValidationError(f"{path}: no rows")
    return {k: (v if k == "timestamp" else np.array(v, dtype=float)) for k, v in cols.items()}


def read_grid(path) -> tuple[list, np.ndarray]:
    ids, xy = [], []
    for line, row in _rows(path, GRID_COLUMNS):
        ids.append(_id(path, line, "grid_id", row["grid_id"]))
        xy.append((_float(path, line, "x", row["x"]), _float(path, line, "y", row["y"])))
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate grid_id")
    return ids, np.array(xy, dtype=float).reshape(-1, 2)


def read_truth(path) -> dict:
    out = {}
    for line, row in _rows(path, TRUTH_COLUMNS):
        key = (_id(path, line, "timestamp", row["timestamp"]),
               _id(path, line, "site_id", row["site_id"]))
        out[key] = _float(path, line, "value", row["value"])
    return out


def read_predictions(path) -> list[dict]:
    out = []
    for line, row in _rows(path, PREDICTION_COLUMNS):
        r = {k: row[k] for k in ("timestamp", "site_id", "kind", "network_id")}
        for c in ("x", "y", "mean"):
            r[c] = _float(path, line, c, row[c])
        for c in ("lower", "upper"):
            r[c] = _float(path, line, c, row[c], allow_blank=True)
        if not (math.isnan(r["lower"]) or math.isnan(r["upper"])) and r["lower"] > r["upper"]:
            raise ValidationError(f"{path}:{line}: lower bound exceeds upper bound")
        out.append(r)
    return out


def read_draws(path) -> dict:
    """``(timestamp, site_id) -> array of draws``."""
    acc: dict = {}
    for line, row in _rows(path, ("timestamp", "site_id", "draw", "value")):
        key = (row["timestamp"], row["site_id"])
        acc.setdefault(key, []).append(_float(path, line, "value", row["value"]))
    return {k: np.array(v) for k, v in acc.items()}


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def fmt(v) -> str:
    """Shortest round-tripping text for a number; blank for NaN/None."""
    if v is None:
        return ""
    if isinstance(v, (str,)):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    return "" if math.isnan(f) else repr(f)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_json(obj))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def regular_grid(lo: float, hi: float, n: int) -> tuple[list, np.ndarray]:
    """Square grid of ``n x n`` points with ids ``g0000``..."""
    g = np.linspace(lo, hi, n)
    XX, YY = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([XX.ravel(), YY.ravel()])
    return [f"g{i:04d}" for i in range(len(pts))], pts
