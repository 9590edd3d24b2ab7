"""GP background plus two point sources, with optional preferential siting.

Network A uses the PurpleAir-type observation model; network B uses
coefficients and noise scaled up from it.  Under preferential sampling only
network B is distorted: 24 of its 30 sites are pushed into the top-left
quadrant, away from both point sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..gp_core import CovParams, build_cov, safe_cholesky


@dataclass(frozen=True)
class S6ObsSpec:
    intercept: float
    slope: float
    rh_coef: float
    var0: float                 # error variance is var0 + var1 * x
    var1: float

    def mean(self, x, rh):
        return self.intercept + self.slope * x + self.rh_coef * rh

    def var(self, x):
        return self.var0 + self.var1 * np.maximum(x, 0.0)

    def sd(self, x):
        return np.sqrt(self.var(x))


@dataclass(frozen=True)
class S6Config:
    n_per_network: int = 30
    n_fixed: int = 6
    n_timepoints: int = 100
    grid_n: int = 11
    ref_box: tuple = (1 / 3, 2 / 3)
    sources: tuple = ((0.2, 0.1), (0.9, 0.2))
    # ambient mean: shift + scale * Beta(a, b)
    mu_shift: float = 2.0
    mu_scale: float = 35.0
    mu_beta: tuple = (2.0, 5.0)
    sigma2_scale: float = 2.0
    sigma2_beta: tuple = (2.0, 5.0)
    nugget_frac: float = 0.1
    corr_range: tuple = (0.5, 0.9)      # correlation at the square's diagonal
    z_shift: float = 20.0
    z_scale: float = 200.0
    z_beta: tuple = (2.0, 5.0)
    halving_distance: float = 0.5
    rh_range: tuple = (30.0, 90.0)
    obs_a: S6ObsSpec = S6ObsSpec(-10.97, 1.91, 0.16, 10.0, 0.5)
    obs_b: S6ObsSpec = S6ObsSpec(-16.46, 2.86, 0.25, 22.5, 1.13)

    @property
    def psi(self) -> float:
        return math.log(2.0) / self.halving_distance ** 2


@dataclass
class S6Dataset:
    ref_site: np.ndarray                 # (1, 2)
    sites: dict                          # network -> (n, 2)
    grid: np.ndarray                     # (g, 2)
    truth_ref: np.ndarray                # (T, 1)
    truth_sites: dict                    # network -> (T, n)
    truth_grid: np.ndarray               # (T, g)
    readings: dict                       # network -> (T, n)
    rh: dict                             # network -> (T, n)
    hyper: np.ndarray                    # (T, 4): mu, sigma2, phi, nugget
    preferential: bool = False
    meta: dict = field(default_factory=dict)


def unit_grid(n: int) -> np.ndarray:
    g = np.linspace(0.0, 1.0, n)
    XX, YY = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([XX.ravel(), YY.ravel()])


def preferential_sites(sites: np.ndarray, n_fixed: int, rng: np.random.Generator) -> np.ndarray:
    """Resample out-of-quadrant coordinates of all but the first ``n_fixed``
    sites into the top-left quadrant ``[0, 0.5] x [0.5, 1]``."""
    s = sites.copy()
    tail = s[n_fixed:]
    bad_x = tail[:, 0] > 0.5
    bad_y = tail[:, 1] < 0.5
    tail[bad_x, 0] = rng.uniform(0.0, 0.5, bad_x.sum())
    tail[bad_y, 1] = rng.uniform(0.5, 1.0, bad_y.sum())
    s[n_fixed:] = tail
    return s


def local_term(points: np.ndarray, sources, z, psi: float) -> np.ndarray:
    out = np.zeros(len(points))
    for (sx, sy), zk in zip(sources, z):
        d2 = (points[:, 0] - sx) ** 2 + (points[:, 1] - sy) ** 2
        out += zk * np.exp(-d2 * psi)
    return out


def sample_hyper(rng: np.random.Generator, cfg: S6Config):
    mu = cfg.mu_shift + cfg.mu_scale * rng.beta(*cfg.mu_beta)
    sigma2 = cfg.sigma2_scale * mu * rng.beta(*cfg.sigma2_beta)
    nugget = cfg.nugget_frac * sigma2 * rng.beta(*cfg.sigma2_beta)
    phi = -math.log(rng.uniform(*cfg.corr_range)) / math.sqrt(2.0)
    return mu, sigma2, phi, nugget


def simulate_truth(points: np.ndarray, rng: np.random.Generator, cfg: S6Config):
    """One timepoint of the true field at ``points``; returns (x, hyper)."""
    mu, sigma2, phi, nugget = sample_hyper(rng, cfg)
    C = build_cov(points, CovParams(sigma2, phi, nugget))
    L = safe_cholesky(C)
    ambient = mu + L @ rng.standard_normal(len(points))
    z = cfg.z_shift + cfg.z_scale * rng.beta(*cfg.z_beta, size=len(cfg.sources))
    return ambient + local_term(points, cfg.sources, z, cfg.psi), (mu, sigma2, phi, nugget)


def observe(x, spec: S6ObsSpec, rng: np.random.Generator, cfg: S6Config):
    """Low-cost readings and the humidity used to make them."""
    rh = rng.uniform(*cfg.rh_range, size=np.shape(x))
    y = spec.mean(x, rh) + spec.sd(x) * rng.standard_normal(np.shape(x))
    return y, rh


def generate_s6_dataset(rng: np.random.Generator, cfg: S6Config = S6Config(),
                        preferential: bool = True) -> S6Dataset:
    lo, hi = cfg.ref_box
    ref = rng.uniform(lo, hi, size=(1, 2))
    sites = {"A": rng.random((cfg.n_per_network, 2)),
             "B": rng.random((cfg.n_per_network, 2))}
    if preferential:
        sites["B"] = preferential_sites(sites["B"], cfg.n_fixed, rng)
    grid = unit_grid(cfg.grid_n)
    pts = np.vstack([ref, sites["A"], sites["B"], grid])
    nA = nB = cfg.n_per_network
    T = cfg.n_timepoints
    truth = np.empty((T, len(pts)))
    hyper = np.empty((T, 4))
    for t in range(T):
        truth[t], hyper[t] = simulate_truth(pts, rng, cfg)
    tA = truth[:, 1:1 + nA]
    tB = truth[:, 1 + nA:1 + nA + nB]
    yA, rhA = observe(tA, cfg.obs_a, rng, cfg)
    yB, rhB = observe(tB, cfg.obs_b, rng, cfg)
    return S6Dataset(
        ref_site=ref, sites=sites, grid=grid, truth_ref=truth[:, :1],
        truth_sites={"A": tA, "B": tB}, truth_grid=truth[:, 1 + nA + nB:],
        readings={"A": yA, "B": yB}, rh={"A": rhA, "B": rhB}, hyper=hyper,
        preferential=preferential)


def generate_training(rng: np.random.Generator, n: int, spec: S6ObsSpec,
                      cfg: S6Config = S6Config()):
    """Collocated training pairs ``(x, y, rh)`` with ``x`` drawn from the same
    field model at uniformly placed sites."""
    xs = []
    per = 40
    while sum(len(v) for v in xs) < n:
        pts = rng.random((per, 2))
        x, _ = simulate_truth(pts, rng, cfg)
        xs.append(x)
    x = np.concatenate(xs)[:n]
    y, rh = observe(x, spec, rng, cfg)
    return x, y, rh
