"""Multi-network GP filter for a single timepoint.

Latent true concentrations follow a GP with constant mean ``mu`` and
exponential covariance.  Reference sites observe the field exactly; each
low-cost network observes ``a + b * x`` plus independent noise of variance
``d`` at its active sites.  Hyperparameters ``(mu, sigma2, phi, nugget)`` are
sampled by component-wise adaptive random-walk Metropolis on the likelihood
with the latent field integrated out; for each retained draw the latent
field at the low-cost sites is then drawn exactly (Kalman update) and the
grid is drawn from the kriging distribution given all site values.

Site order everywhere downstream is: networks in input order, sites within
each network in input order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf, dtrtrs

from .gp_core import (CovParams, GaussianSurface, IllConditionedError, build_cov,
                      cross_cov, distances, safe_cholesky)
from .obs_model import MIN_GAIN, NonInvertibleError, ObsModelParams

log = logging.getLogger(__name__)

PARAM_NAMES = ("mu", "sigma2", "phi", "nugget")
_LOG2PI = math.log(2 * math.pi)


class AllRejectedError(RuntimeError):
    """MCMC chain never accepted a proposal after burn-in."""


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkData:
    network_id: str
    sites: np.ndarray
    readings: np.ndarray
    model: ObsModelParams
    covariates: dict | None = None
    site_ids: tuple | None = None

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=float).reshape(-1, 2)
        y = np.asarray(self.readings, dtype=float).reshape(-1)
        if len(s) != len(y):
            raise ValueError(f"network {self.network_id}: {len(s)} sites but {len(y)} readings")
        if not np.all(np.isfinite(y)):
            raise ValueError(f"network {self.network_id}: non-finite readings")
        object.__setattr__(self, "sites", s)
        object.__setattr__(self, "readings", y)
        if self.covariates is not None:
            z = {k: np.asarray(v, dtype=float).reshape(-1) for k, v in self.covariates.items()}
            for k in self.model.covariates:
                if k not in z or len(z[k]) != len(y):
                    raise ValueError(f"network {self.network_id}: covariate {k!r} misaligned")
            object.__setattr__(self, "covariates", z)
        elif self.model.covariates:
            raise ValueError(f"network {self.network_id}: model needs {self.model.covariates}")
        ids = self.site_ids
        object.__setattr__(self, "site_ids",
                           tuple(str(i) for i in ids) if ids is not None
                           else tuple(f"{self.network_id}-{i}" for i in range(len(y))))

    @property
    def n(self) -> int:
        return len(self.readings)


@dataclass(frozen=True)
class FilterInput:
    ref_sites: np.ndarray
    ref_values: np.ndarray
    networks: tuple[NetworkData, ...] = ()
    grid: np.ndarray | None = None
    ref_ids: tuple | None = None

    def __post_init__(self):
        s0 = np.asarray(self.ref_sites, dtype=float).reshape(-1, 2)
        x0 = np.asarray(self.ref_values, dtype=float).reshape(-1)
        if len(s0) != len(x0):
            raise ValueError("reference sites and values differ in length")
        if not np.all(np.isfinite(x0)) or np.any(x0 < 0):
            raise ValueError("reference values must be finite and >= 0")
        object.__setattr__(self, "ref_sites", s0)
        object.__setattr__(self, "ref_values", x0)
        # networks with no active site are skipped at this timepoint
        object.__setattr__(self, "networks", tuple(n for n in self.networks if n.n > 0))
        if self.grid is not None:
            object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float).reshape(-1, 2))
        ids = self.ref_ids
        object.__setattr__(self, "ref_ids", tuple(str(i) for i in ids) if ids is not None
                           else tuple(f"ref-{i}" for i in range(len(x0))))

    @property
    def lc_sites(self) -> np.ndarray:
        if not self.networks:
            return np.zeros((0, 2))
        return np.vstack([n.sites for n in self.networks])

    @property
    def readings(self) -> np.ndarray:
        if not self.networks:
            return np.zeros(0)
        return np.concatenate([n.readings for n in self.networks])

    @property
    def n_lc(self) -> int:
        return sum(n.n for n in self.networks)

    @property
    def n_grid(self) -> int:
        return 0 if self.grid is None else len(self.grid)

    def subset(self, network_ids: Sequence[str]) -> "FilterInput":
        """Same timepoint restricted to the named networks."""
        keep = tuple(n for n in self.networks if n.network_id in set(network_ids))
        return FilterInput(self.ref_sites, self.ref_values, keep, self.grid, self.ref_ids)


@dataclass(frozen=True)
class AffineObs:
    a: np.ndarray
    b: np.ndarray
    d: np.ndarray
    naive: np.ndarray

    @property
    def B(self) -> np.ndarray:
        return np.diag(self.b)

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.d)


def assemble_affine(inp: FilterInput) -> AffineObs:
    """Stack offsets, gains and noise variances over all active low-cost sites.

    The noise variance at each site is the network's variance model evaluated
    at the naive inversion of that site's reading (clipped at zero), floored.
    """
    a_parts, b_parts, d_parts, naive_parts = [], [], [], []
    for net in inp.networks:
        a, b = net.model.offset_gain(net.covariates, n=net.n)
        small = np.abs(b) < MIN_GAIN
        if np.any(small):
            bad = [net.site_ids[i] for i in np.flatnonzero(small)]
            raise NonInvertibleError(
                f"network {net.network_id}: effective gain below {MIN_GAIN:g} at sites {bad}")
        naive = (net.readings - a) / b
        d = net.model.tau2(np.maximum(naive, 0.0))
        a_parts.append(a)
        b_parts.append(b)
        d_parts.append(d)
        naive_parts.append(naive)
    if not a_parts:
        z = np.zeros(0)
        return AffineObs(z, z, z, z)
    return AffineObs(*(np.concatenate(p) for p in (a_parts, b_parts, d_parts, naive_parts)))


# ---------------------------------------------------------------------------
# exact Gaussian pieces
# ---------------------------------------------------------------------------

def kalman_update(obs: AffineObs, y, prior: GaussianSurface) -> GaussianSurface:
    """Posterior of x given ``y ~ N(a + B x, D)`` and ``x ~ prior``.

    Computed in gain form, which equals ``N(M^-1 m, M^-1)`` with
    ``M = B D^-1 B + C^-1`` and ``m = B D^-1 (y - a) + C^-1 mu`` but never
    inverts the prior covariance.
    """
    y = np.asarray(y, dtype=float)
    if np.any(obs.d <= 0):
        raise ValueError("noise variances must be positive")
    C = prior.cov
    CB = C * obs.b[None, :]                        # C B
    S = obs.b[:, None] * CB + np.diag(obs.d)       # B C B + D
    L = safe_cholesky(S)
    innov = y - obs.a - obs.b * prior.mean
    u = solve_triangular(L, innov, lower=True, check_finite=False)
    W = solve_triangular(L, CB.T, lower=True, check_finite=False)   # L^-1 B C
    mean = prior.mean + W.T @ u
    cov = C - W.T @ W
    cov = 0.5 * (cov + cov.T)
    return GaussianSurface(mean, cov, prior.sites)


class MarginalModel:
    """Likelihood of ``(y, x0)`` with the latent field integrated out.

    ``(y, x0) ~ N((a + b mu, mu), T C T' + diag(d, 0))`` with
    ``T = diag(b, 1)`` and ``C`` the GP covariance over ``(S*, S0)``.
    Caches the factorization so that changing only ``mu`` costs O(n).
    """

    def __init__(self, inp: FilterInput, obs: AffineObs | None = None):
        self.inp = inp
        self.obs = assemble_affine(inp) if obs is None else obs
        self.sites = np.vstack([inp.lc_sites, inp.ref_sites])
        self.n = len(self.sites)
        if self.n == 0:
            raise ValueError("no low-cost or reference observations")
        self.dist = distances(self.sites)
        n0 = len(inp.ref_values)
        self.bb = np.concatenate([self.obs.b, np.ones(n0)])
        self.dd = np.concatenate([self.obs.d, np.zeros(n0)])
        self.resid0 = np.concatenate([inp.readings - self.obs.a, inp.ref_values])
        if not np.all(np.isfinite(self.resid0)):
            raise ValueError("non-finite inputs")
        self.rhs = np.asfortranarray(np.column_stack([self.resid0, self.bb]))
        self.bouter = np.outer(self.bb, self.bb)
        self.bb2 = self.bb ** 2
        self._phi = None
        self._E = None
        self._key = None
        self._cache = None

    def _expo(self, phi: float) -> np.ndarray:
        if phi != self._phi:
            self._E = np.exp(-phi * self.dist) * self.bouter
            self._phi = phi
        return self._E

    def factor(self, sigma2: float, phi: float, nugget: float):
        key = (sigma2, phi, nugget)
        if key == self._key:
            return self._cache
        S = sigma2 * self._expo(phi)
        S[np.diag_indices(self.n)] += nugget * self.bb2 + self.dd
        # raw LAPACK: this runs thousands of times per chain
        L, info = dpotrf(S, lower=1, clean=0, overwrite_a=1)
        if info != 0:
            L = safe_cholesky(S)
        uw, _ = dtrtrs(L, self.rhs, lower=1)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        self._key, self._cache = key, (logdet, uw[:, 0].copy(), uw[:, 1].copy())
        return self._cache

    def loglik(self, mu: float, sigma2: float, phi: float, nugget: float) -> float:
        logdet, u, w = self.factor(sigma2, phi, nugget)
        r = u - mu * w
        return -0.5 * (self.n * _LOG2PI + logdet + float(r @ r))


def joint_marginal_loglik(mu: float, theta: CovParams, inp: FilterInput) -> float:
    """Log density of the observed ``(y, x0)`` at fixed ``(mu, theta)``."""
    if not (np.isfinite(mu) and np.isfinite(theta.sigma2) and np.isfinite(theta.phi)
            and np.isfinite(theta.nugget)):
        raise ValueError("non-finite parameters")
    return MarginalModel(inp).loglik(mu, theta.sigma2, theta.phi, theta.nugget)


class _Conditioner:
    """Exact conditional draws of the latent field at fixed hyperparameters."""

    def __init__(self, inp: FilterInput, obs: AffineObs):
        self.inp = inp
        self.obs = obs
        self.n0 = len(inp.ref_values)
        self.ns = inp.n_lc
        # joint site list for kriging: reference first, then low-cost
        self.sites = np.vstack([inp.ref_sites, inp.lc_sites])
        self.dist = distances(self.sites)
        self.grid_dist = None if inp.grid is None else distances(inp.grid, self.sites)
        self.grid_self = None if inp.grid is None else distances(inp.grid)

    def lc_posterior(self, mu: float, p: CovParams) -> tuple[GaussianSurface, np.ndarray]:
        C = build_cov(self.sites, p, dist=self.dist)
        n0 = self.n0
        x0 = self.inp.ref_values
        Css = C[n0:, n0:]
        mean = np.full(self.ns, mu)
        if n0:
            L0 = safe_cholesky(C[:n0, :n0])
            W = solve_triangular(L0, C[:n0, n0:], lower=True, check_finite=False)
            u = solve_triangular(L0, x0 - mu, lower=True, check_finite=False)
            mean = mean + W.T @ u
            Css = Css - W.T @ W
            Css = 0.5 * (Css + Css.T)
        prior = GaussianSurface(mean, Css, self.inp.lc_sites)
        return kalman_update(self.obs, self.inp.readings, prior), C

    def draw(self, mu: float, p: CovParams, rng: np.random.Generator,
             joint_grid: bool = False):
        post, C = self.lc_posterior(mu, p)
        if self.ns:
            L = safe_cholesky(post.cov)
            xs = post.mean + L @ rng.standard_normal(self.ns)
        else:
            xs = np.zeros(0)
        if self.inp.grid is None:
            return xs, None
        xall = np.concatenate([self.inp.ref_values, xs])
        Lc = safe_cholesky(C)
        Cgs = p.sigma2 * np.exp(-p.phi * self.grid_dist) + p.nugget * (self.grid_dist == 0)
        W = solve_triangular(Lc, Cgs.T, lower=True, check_finite=False)
        u = solve_triangular(Lc, xall - mu, lower=True, check_finite=False)
        gmean = mu + W.T @ u
        ng = len(gmean)
        if joint_grid:
            Cgg = build_cov(self.inp.grid, p, dist=self.grid_self) - W.T @ W
            Lg = safe_cholesky(0.5 * (Cgg + Cgg.T))
            return xs, gmean + Lg @ rng.standard_normal(ng)
        gvar = np.maximum(p.sigma2 + p.nugget - np.einsum("ij,ij->j", W, W), 0.0)
        return xs, gmean + np.sqrt(gvar) * rng.standard_normal(ng)


# ---------------------------------------------------------------------------
# priors and sampler configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PriorSpec:
    """mu ~ HalfNormal(scale=mu_scale); sigma2 ~ U(0, sigma2_max);
    nugget ~ U(0, nugget_max); phi ~ U(phi_min, phi_max)."""

    mu_scale: float
    sigma2_max: float
    nugget_max: float
    phi_min: float
    phi_max: float

    def __post_init__(self):
        for k in ("mu_scale", "sigma2_max", "nugget_max", "phi_min", "phi_max"):
            v = getattr(self, k)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{k} must be finite and > 0, got {v}")
        if not self.phi_min < self.phi_max:
            raise ValueError("phi_min must be < phi_max")


def phi_bounds(d_max: float, lo_corr: float = 0.02, hi_corr: float = 0.98):
    """Decay bounds so the correlation at distance ``d_max`` lies in
    ``[lo_corr, hi_corr]``."""
    if not d_max > 0:
        raise ValueError("network diameter must be > 0")
    return -math.log(hi_corr) / d_max, -math.log(lo_corr) / d_max


def _positive_var(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    var = float(np.var(v, ddof=1)) if len(v) > 1 else 0.0
    if var > 0:
        return var
    # too few or identical values: fall back to a scale set by the level
    level = float(np.mean(np.abs(v))) if len(v) else 0.0
    return (0.5 * level + 1.0) ** 2


def default_prior(inp: FilterInput, primary_network: str | None = None,
                  obs: AffineObs | None = None) -> PriorSpec:
    """Per-timepoint prior bounds from the data.

    * nugget bound: variance of the primary network's readings
    * sigma2 bound: twice the variance of the pooled naive inversions
    * phi bounds: correlation between 2% and 98% at the largest site distance
    * half-normal scale for mu: 10x the sd of the pooled naive inversions
    """
    obs = assemble_affine(inp) if obs is None else obs
    pooled = np.concatenate([obs.naive, inp.ref_values])
    primary = None
    if inp.networks:
        ids = [n.network_id for n in inp.networks]
        pid = primary_network if primary_network in ids else ids[0]
        primary = inp.networks[ids.index(pid)].readings
    nug = _positive_var(primary if primary is not None else pooled)
    s2 = 2.0 * _positive_var(pooled)
    sites = np.vstack([inp.ref_sites, inp.lc_sites])
    dmax = float(distances(sites).max()) if len(sites) > 1 else 0.0
    if not dmax > 0:
        dmax = 1.0
    lo, hi = phi_bounds(dmax)
    return PriorSpec(10.0 * math.sqrt(_positive_var(pooled)), s2, nug, lo, hi)


@dataclass(frozen=True)
class ChainConfig:
    n_iter: int = 5000
    burn_in: int = 2000
    thin: int = 3
    target_accept: float = 0.30
    adapt: bool = True
    joint_grid: bool = False

    def __post_init__(self):
        if self.n_iter <= self.burn_in:
            raise ValueError("n_iter must exceed burn_in")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_keep(self) -> int:
        return len(range(self.burn_in, self.n_iter, self.thin))


# ---------------------------------------------------------------------------
# posterior container
# ---------------------------------------------------------------------------

def predict_summaries(draws, level: float = 0.95):
    """Per-site mean and equal-tailed central interval from draws
    ``(n_draws, n_sites)``."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    if draws.shape[0] < 100:
        raise ValueError(f"need at least 100 draws, got {draws.shape[0]}")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    q = (1 - level) / 2
    lower, upper = np.quantile(draws, [q, 1 - q], axis=0)
    mean = draws.mean(axis=0)
    # a mean outside the quantile band only happens with degenerate draws
    return mean, np.minimum(lower, mean), np.maximum(upper, mean)


@dataclass
class PosteriorField:
    hyper_samples: np.ndarray            # (n_keep, 4): mu, sigma2, phi, nugget
    x_samples: np.ndarray                # (n_keep, n_lc)
    grid_samples: np.ndarray | None      # (n_keep, n_grid)
    ref_values: np.ndarray
    lc_ids: tuple
    ref_ids: tuple
    network_of: tuple
    acceptance: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def summaries(self, level: float = 0.95) -> dict:
        """Mean/lower/upper for low-cost, grid and reference sites."""
        out = {}
        if self.x_samples.shape[1]:
            out["lc"] = predict_summaries(self.x_samples, level)
        else:
            out["lc"] = (np.zeros(0),) * 3
        if self.grid_samples is not None:
            out["grid"] = predict_summaries(self.grid_samples, level)
        r = self.ref_values
        out["ref"] = (r.copy(), r.copy(), r.copy())
        return out

    def hyper_summary(self, level: float = 0.95) -> dict:
        m, lo, hi = predict_summaries(self.hyper_samples, level)
        return {name: (float(m[i]), float(lo[i]), float(hi[i]))
                for i, name in enumerate(PARAM_NAMES)}


# ---------------------------------------------------------------------------
# sampler
# ---------------------------------------------------------------------------

class _Target:
    """Log posterior in transformed coordinates
    (mu, log sigma2, logit-scaled phi, log nugget)."""

    def __init__(self, model: MarginalModel, prior: PriorSpec):
        self.m = model
        self.p = prior
        self.phi_w = prior.phi_max - prior.phi_min

    def natural(self, z):
        mu, ls2, lphi, lnug = z
        w = 1.0 / (1.0 + math.exp(-lphi))
        return mu, math.exp(ls2), self.p.phi_min + self.phi_w * w, math.exp(lnug)

    def transformed(self, mu, sigma2, phi, nugget):
        w = (phi - self.p.phi_min) / self.phi_w
        return np.array([mu, math.log(sigma2), math.log(w / (1 - w)), math.log(nugget)])

    def logprior(self, z) -> float:
        mu, ls2, lphi, lnug = z
        if mu < 0 or ls2 >= math.log(self.p.sigma2_max) or lnug >= math.log(self.p.nugget_max):
            return -math.inf
        # half-normal on mu, uniform on sigma2 / nugget / phi with Jacobians
        lw = -math.log1p(math.exp(-lphi)) if lphi > -700 else lphi
        l1w = -math.log1p(math.exp(lphi)) if lphi < 700 else -lphi
        return -0.5 * (mu / self.p.mu_scale) ** 2 + ls2 + lnug + lw + l1w

    def __call__(self, z) -> float:
        lp = self.logprior(z)
        if lp == -math.inf:
            return lp
        mu, s2, phi, nug = self.natural(z)
        if not (s2 > 0 and nug >= 0 and np.isfinite(phi)):
            return -math.inf
        try:
            return lp + self.m.loglik(mu, s2, phi, nug)
        except IllConditionedError:
            return -math.inf


def _initial_state(target: _Target, obs: AffineObs, inp: FilterInput) -> np.ndarray:
    pooled = np.concatenate([obs.naive, inp.ref_values])
    p = target.p
    mu0 = float(np.clip(np.mean(pooled), 1e-3, None)) if len(pooled) else 1.0
    mu0 = min(mu0, 3 * p.mu_scale)
    s20 = min(_positive_var(pooled), 0.5 * p.sigma2_max)
    nug0 = 0.1 * p.nugget_max
    phi0 = 0.5 * (p.phi_min + p.phi_max)
    return target.transformed(mu0, s20, phi0, nug0)


def mcmc_filter(inp: FilterInput, prior: PriorSpec | None = None,
                cfg: ChainConfig = ChainConfig(), seed=None,
                pinned: tuple[float, CovParams] | None = None) -> PosteriorField:
    """Posterior of the latent field at one timepoint.

    ``pinned=(mu, CovParams)`` skips hyperparameter sampling and draws
    ``cfg.n_keep`` exact latent-field samples at those values.
    """
    if inp.n_lc == 0 and len(inp.ref_values) == 0:
        raise ValueError("timepoint has no low-cost or reference observations")
    rng = np.random.default_rng(seed)
    obs = assemble_affine(inp)
    cond = _Conditioner(inp, obs)
    n_keep = cfg.n_keep
    hyper = np.empty((n_keep, 4))
    acceptance: dict = {}
    warnings: list = []

    if pinned is not None:
        mu, p = pinned
        hyper[:] = (mu, p.sigma2, p.phi, p.nugget)
    else:
        prior = default_prior(inp, obs=obs) if prior is None else prior
        target = _Target(MarginalModel(inp, obs), prior)
        z = _initial_state(target, obs, inp)
        lp = target(z)
        if lp == -math.inf:
            raise IllConditionedError("initial hyperparameters give zero posterior density")
        pooled_sd = math.sqrt(_positive_var(np.concatenate([obs.naive, inp.ref_values])))
        log_step = np.log(np.array([max(pooled_sd / 4, 1e-3), 0.5, 0.5, 0.5]))
        acc = np.zeros(4)
        k = 0
        for it in range(cfg.n_iter):
            for j in range(4):
                prop = z.copy()
                prop[j] += math.exp(log_step[j]) * rng.standard_normal()
                if j == 0:
                    prop[0] = abs(prop[0])      # reflect at the half-normal boundary
                lp_prop = target(prop)
                accept_prob = 1.0 if lp_prop >= lp else math.exp(lp_prop - lp)
                if rng.random() < accept_prob:
                    z, lp = prop, lp_prop
                    if it >= cfg.burn_in:
                        acc[j] += 1
                if cfg.adapt and it < cfg.burn_in:
                    log_step[j] += (accept_prob - cfg.target_accept) * (it + 1) ** -0.6
            if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
                hyper[k] = target.natural(z)
                k += 1
        n_post = cfg.n_iter - cfg.burn_in
        rates = acc / n_post
        acceptance = {name: float(r) for name, r in zip(PARAM_NAMES, rates)}
        if acc.sum() == 0:
            raise AllRejectedError("no proposal accepted after burn-in")
        for name, r in acceptance.items():
            if not 0.05 <= r <= 0.8:
                warnings.append(f"acceptance rate for {name} = {r:.3f} outside [0.05, 0.8]")

    xs = np.empty((n_keep, inp.n_lc))
    gs = None if inp.grid is None else np.empty((n_keep, inp.n_grid))
    for i in range(n_keep):
        mu, s2, phi, nug = hyper[i]
        x, g = cond.draw(mu, CovParams(s2, phi, nug), rng, joint_grid=cfg.joint_grid)
        xs[i] = x
        if gs is not None:
            gs[i] = g

    lc_ids = tuple(i for n in inp.networks for i in n.site_ids)
    network_of = tuple(n.network_id for n in inp.networks for _ in range(n.n))
    return PosteriorField(
        hyper_samples=hyper, x_samples=xs, grid_samples=gs,
        ref_values=inp.ref_values.copy(), lc_ids=lc_ids, ref_ids=inp.ref_ids,
        network_of=network_of, acceptance=acceptance, warnings=warnings,
        meta={"chain": asdict(cfg), "prior": None if prior is None else asdict(prior),
              "pinned": pinned is not None})


def _run_one(job):
    inp, prior, cfg, seed = job
    return mcmc_filter(inp, prior, cfg, seed)


def timepoint_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Independent, order-free seed for the ``index``-th timepoint."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))


def run_timepoints(inputs: Sequence[FilterInput], priors: Sequence[PriorSpec | None],
                   cfg: ChainConfig, seed: int, workers: int = 1) -> list[PosteriorField]:
    """Filter many independent timepoints, optionally in worker processes.

    Results are identical for any worker count.
    """
    jobs = [(inp, pr, cfg, timepoint_seed(seed, i))
            for i, (inp, pr) in enumerate(zip(inputs, priors))]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, jobs))
