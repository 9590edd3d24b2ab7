"""Synthetic low-cost networks observing a simulated field."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator


@dataclass(frozen=True)
class SyntheticNetworkSpec:
    n: int
    a: float
    b: float
    sigma: float
    region: str = "full"            # "full" or "no_lower_left"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.region not in ("full", "no_lower_left"):
            raise ValueError(f"unknown region {self.region!r}")


DEFAULT_S5_SPECS = (
    SyntheticNetworkSpec(100, a=1.0, b=1.2, sigma=2.0, region="full"),
    SyntheticNetworkSpec(100, a=2.0, b=1.5, sigma=1.0, region="no_lower_left"),
)


@dataclass(frozen=True)
class SyntheticNetwork:
    spec: SyntheticNetworkSpec
    sites: np.ndarray
    colocated: int          # index of the sensor nearest the network centroid


def sample_sites(n: int, region: str, rng: np.random.Generator) -> np.ndarray:
    """Uniform sites on the unit square, optionally avoiding ``[0, 0.5)^2``."""
    if region == "full":
        return rng.random((n, 2))
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.random((2 * n, 2))
        keep = ~((cand[:, 0] < 0.5) & (cand[:, 1] < 0.5))
        out = np.vstack([out, cand[keep]])
    return out[:n]


def nearest_to_centroid(sites: np.ndarray) -> int:
    c = sites.mean(axis=0)
    return int(np.argmin(((sites - c) ** 2).sum(axis=1)))


def generate_networks_s5(rng: np.random.Generator,
                         specs=DEFAULT_S5_SPECS) -> list[SyntheticNetwork]:
    nets = []
    for spec in specs:
        s = sample_sites(spec.n, spec.region, rng)
        nets.append(SyntheticNetwork(spec, s, nearest_to_centroid(s)))
    return nets


def synth_obs(truth, spec: SyntheticNetworkSpec, rng: np.random.Generator) -> np.ndarray:
    """Readings ``a + b * truth + N(0, sigma^2)``, independent everywhere."""
    truth = np.asarray(truth, dtype=float)
    noise = rng.standard_normal(truth.shape) * spec.sigma if spec.sigma > 0 else 0.0
    return spec.a + spec.b * truth + noise


def interpolate_frames(frames: np.ndarray, coords: np.ndarray, points) -> np.ndarray:
    """Bilinear interpolation of each frame ``(T, n, n)`` at ``points``; returns (T, m)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    # move time to the last axis so one interpolator handles every frame
    interp = RegularGridInterpolator((coords, coords), np.moveaxis(frames, 0, -1),
                                     method="linear")
    return interp(pts).T
