"""Evaluation metrics and the inverse-distance-weighting baseline."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .obs_model import ObsModelParams, invert_obs_model


def idw_interpolate(known_sites, known_values, targets, power: float = 2.0) -> np.ndarray:
    """Inverse-distance-weighted mean; a target on a known site gets that value."""
    s = np.asarray(known_sites, dtype=float).reshape(-1, 2)
    v = np.asarray(known_values, dtype=float).reshape(-1)
    t = np.asarray(targets, dtype=float).reshape(-1, 2)
    if len(s) == 0:
        raise ValueError("need at least one known site")
    if len(s) != len(v):
        raise ValueError("known sites and values differ in length")
    if not power > 0:
        raise ValueError("power must be > 0")
    d = cdist(t, s)
    out = np.empty(len(t))
    hit = d == 0
    exact = hit.any(axis=1)
    if exact.any():
        out[exact] = v[np.argmax(hit[exact], axis=1)]
    dn = d[~exact]
    # relative to the nearest site, so tiny distances cannot overflow
    w = (dn / dn.min(axis=1, keepdims=True)) ** -power
    out[~exact] = (w @ v) / w.sum(axis=1)
    return out


def regcal_idw(networks: Sequence[tuple], targets, power: float = 2.0) -> np.ndarray:
    """RegCal baseline: invert each network's regression at its sites,
    interpolate each network by IDW, then average across networks.

    ``networks`` holds ``(sites, readings, covariates, ObsModelParams)``.
    """
    preds = []
    for sites, y, z, model in networks:
        x_hat = invert_obs_model(y, z, model)
        preds.append(idw_interpolate(sites, x_hat, targets, power))
    if not preds:
        raise ValueError("no networks")
    return np.mean(preds, axis=0)


def _pair(pred, truth):
    p = np.asarray(pred, dtype=float).reshape(-1)
    t = np.asarray(truth, dtype=float).reshape(-1)
    if len(p) != len(t):
        raise ValueError("prediction and truth differ in length")
    if len(p) == 0:
        raise ValueError("empty input")
    return p, t


def point_metrics(pred, truth) -> tuple[float, float, float]:
    """(rmse, mae, bias) with bias = mean(pred - truth)."""
    p, t = _pair(pred, truth)
    e = p - t
    return float(np.sqrt(np.mean(e ** 2))), float(np.mean(np.abs(e))), float(np.mean(e))


def crps_sample(samples, truth) -> np.ndarray:
    """CRPS of the empirical distribution of the draws, per target:
    ``mean|X - y| - 0.5 * mean|X - X'|`` over all pairs.

    ``samples`` has shape (n_draws, n_targets).
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(truth, dtype=float).reshape(-1)
    m = X.shape[0]
    if X.shape[1] != len(y):
        raise ValueError("samples and truth differ in number of targets")
    term1 = np.mean(np.abs(X - y[None, :]), axis=0)
    if m < 2:
        return term1
    # sum_{i<j} |x_(j) - x_(i)| = sum_k (2k - m - 1) x_(k) for sorted x, k = 1..m
    Xs = np.sort(X, axis=0)
    k = np.arange(1, m + 1)[:, None]
    pair_sum = np.sum((2 * k - m - 1) * Xs, axis=0)
    term2 = 2.0 * pair_sum / m ** 2
    return term1 - 0.5 * term2


def interval_metrics(truth, lower=None, upper=None, samples=None, level: float = 0.95):
    """Coverage, mean width, mean interval score and mean CRPS.

    Pass either ``samples`` (n_draws, n_targets) or explicit bounds.  CRPS is
    NaN when no samples are given.
    """
    y = np.asarray(truth, dtype=float).reshape(-1)
    crps = float("nan")
    if samples is not None:
        S = np.asarray(samples, dtype=float)
        S = S[:, None] if S.ndim == 1 else S
        q = (1 - level) / 2
        lower, upper = np.quantile(S, [q, 1 - q], axis=0)
        crps = float(np.mean(crps_sample(S, y)))
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    if not (len(lo) == len(hi) == len(y)) or len(y) == 0:
        raise ValueError("bounds and truth must have the same nonzero length")
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    alpha = 1 - level
    width = hi - lo
    score = width + (2 / alpha) * np.maximum(lo - y, 0) + (2 / alpha) * np.maximum(y - hi, 0)
    cover = (y >= lo) & (y <= hi)
    return float(np.mean(cover)), float(np.mean(width)), float(np.mean(score)), crps


def ci_percent_diff(l2, l1):
    """Percent change in interval length, ``(l2 - l1) / l1 * 100``."""
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    if np.any(l1 <= 0):
        raise ValueError("reference length l1 must be > 0")
    out = (l2 - l1) / l1 * 100.0
    return out if out.ndim else float(out)


def pseudo_rmse(pred, sites, ref_site, ref_value, radius: float) -> float:
    """RMSE of predictions within ``radius`` of the reference site against
    the reference reading."""
    p = np.asarray(pred, dtype=float).reshape(-1)
    s = np.asarray(sites, dtype=float).reshape(-1, 2)
    if len(p) != len(s):
        raise ValueError("predictions and sites differ in length")
    d = np.hypot(*(s - np.asarray(ref_site, dtype=float).reshape(1, 2)).T)
    keep = d <= radius
    if not keep.any():
        raise ValueError(f"no sites within radius {radius}")
    return float(np.sqrt(np.mean((p[keep] - float(ref_value)) ** 2)))


METRIC_FIELDS = ("rmse", "mae", "bias", "crps", "coverage", "width", "interval_score")


@dataclass
class MetricReport:
    """Per-(method, timepoint) metrics with an averaged summary."""

    rows: list = field(default_factory=list)

    def add(self, method: str, timepoint, truth, mean, samples=None, lower=None,
            upper=None, level: float = 0.95) -> dict:
        rmse, mae, bias = point_metrics(mean, truth)
        cov, width, score, crps = interval_metrics(truth, lower, upper, samples, level)
        row = {"method": method, "timepoint": timepoint, "rmse": rmse, "mae": mae,
               "bias": bias, "crps": crps, "coverage": cov, "width": width,
               "interval_score": score}
        self.rows.append(row)
        return row

    def summary(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out.setdefault(r["method"], []).append([r[k] for k in METRIC_FIELDS])
        return {m: dict(zip(METRIC_FIELDS, np.mean(np.array(v, dtype=float), axis=0)))
                for m, v in out.items()}

    def to_csv(self, path) -> None:
        cols = ("method", "timepoint") + METRIC_FIELDS
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow([r["method"], r["timepoint"]] + [_fmt(r[k]) for k in METRIC_FIELDS])
            for m, s in self.summary().items():
                w.writerow([m, "mean"] + [_fmt(s[k]) for k in METRIC_FIELDS])


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and np.isnan(v)) else repr(float(v))
