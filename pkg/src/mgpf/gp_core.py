"""Exponential-covariance Gaussian process machinery.

Covariances follow ``C(d) = sigma2 * exp(-phi * d) + nugget * 1{d == 0}``.
Within a single site list the nugget sits on the diagonal only, so two
sensors sharing coordinates are still distinct variables.  Between two
different site lists (e.g. grid points against sensors) the nugget is added
wherever the distance is exactly zero, which makes a prediction point placed
on a known site the *same* variable as that site.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.spatial.distance import cdist

__all__ = [
    "CovParams",
    "GaussianSurface",
    "IllConditionedError",
    "exp_cov",
    "distances",
    "build_cov",
    "cross_cov",
    "safe_cholesky",
    "conditional_gp",
    "mvn_logpdf",
]

JITTER_START = 1e-10
JITTER_MAX = 1e-4


class IllConditionedError(np.linalg.LinAlgError):
    """Raised when a covariance matrix cannot be factorized even after jitter."""


@dataclass(frozen=True)
class CovParams:
    sigma2: float
    phi: float
    nugget: float = 0.0

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")
        if not self.nugget >= 0:
            raise ValueError(f"nugget must be >= 0, got {self.nugget}")
        if not self.phi > 0:
            raise ValueError(f"phi must be > 0, got {self.phi}")


@dataclass(frozen=True)
class GaussianSurface:
    """Multivariate normal over an ordered list of sites."""

    mean: np.ndarray
    cov: np.ndarray
    sites: np.ndarray

    @property
    def var(self) -> np.ndarray:
        return np.diag(self.cov).copy()

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        L = safe_cholesky(self.cov)
        n = len(self.mean)
        if size is None:
            return self.mean + L @ rng.standard_normal(n)
        return self.mean + rng.standard_normal((size, n)) @ L.T


def exp_cov(d, p: CovParams):
    """Covariance at distance ``d`` (scalar or array)."""
    d = np.asarray(d, dtype=float)
    out = p.sigma2 * np.exp(-p.phi * d) + p.nugget * (d == 0)
    return out if out.ndim else float(out)


def _as_sites(sites) -> np.ndarray:
    s = np.asarray(sites, dtype=float)
    if s.ndim == 1:
        s = s.reshape(-1, 2) if s.size % 2 == 0 and s.size else s.reshape(0, 2)
    if s.ndim != 2 or s.shape[1] != 2:
        raise ValueError(f"sites must have shape (n, 2), got {s.shape}")
    return s


def distances(a, b=None) -> np.ndarray:
    """Euclidean distance matrix between two site lists."""
    a = _as_sites(a)
    b = a if b is None else _as_sites(b)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    return cdist(a, b)


def build_cov(sites, p: CovParams, dist: np.ndarray | None = None) -> np.ndarray:
    """Covariance among one site list; nugget on the diagonal only."""
    d = distances(sites) if dist is None else dist
    C = p.sigma2 * np.exp(-p.phi * d)
    C[np.diag_indices_from(C)] += p.nugget
    return C


def cross_cov(a, b, p: CovParams, dist: np.ndarray | None = None) -> np.ndarray:
    """Covariance between two distinct site lists (nugget where d == 0)."""
    d = distances(a, b) if dist is None else dist
    return p.sigma2 * np.exp(-p.phi * d) + p.nugget * (d == 0)


def safe_cholesky(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter if needed.

    Jitter starts at 1e-10 * mean(diag) and grows tenfold up to
    1e-4 * mean(diag); past that an :class:`IllConditionedError` is raised.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return A.copy()
    try:
        return cholesky(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    if not np.all(np.isfinite(A)):
        raise IllConditionedError("covariance has non-finite entries")
    scale = float(np.mean(np.diag(A)))
    if not scale > 0:
        raise IllConditionedError("covariance has non-positive mean diagonal")
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return cholesky(A + jitter * scale * np.eye(len(A)), lower=True,
                            check_finite=False)
        except np.linalg.LinAlgError:
            jitter *= 10
    raise IllConditionedError(
        f"covariance not factorizable with jitter up to {JITTER_MAX:g} * mean(diag)")


def mvn_logpdf(x, mean, cov) -> float:
    """Log density of a multivariate normal via Cholesky."""
    r = np.asarray(x, dtype=float) - np.asarray(mean, dtype=float)
    L = safe_cholesky(cov)
    u = solve_triangular(L, r, lower=True, check_finite=False)
    n = len(r)
    return float(-0.5 * (n * np.log(2 * np.pi) + 2 * np.sum(np.log(np.diag(L))) + u @ u))


def conditional_gp(prior_mean: float, p: CovParams, cond_sites, cond_values,
                   target_sites) -> GaussianSurface:
    """Kriging distribution of the field at ``target_sites`` given exact values
    at ``cond_sites``.

    With no conditioning sites the unconditional prior is returned.
    """
    T = _as_sites(target_sites)
    S0 = _as_sites(cond_sites)
    x0 = np.asarray(cond_values, dtype=float).reshape(-1)
    if len(x0) != len(S0):
        raise ValueError("cond_values length does not match cond_sites")
    mean = np.full(len(T), float(prior_mean))
    Ctt = build_cov(T, p)
    if len(S0) == 0:
        return GaussianSurface(mean, Ctt, T)
    L = safe_cholesky(build_cov(S0, p))
    Cts = cross_cov(T, S0, p)
    W = solve_triangular(L, Cts.T, lower=True, check_finite=False)  # L^-1 C(S0,T)
    u = solve_triangular(L, x0 - prior_mean, lower=True, check_finite=False)
    mean = mean + W.T @ u
    cov = Ctt - W.T @ W
    cov = 0.5 * (cov + cov.T)
    return GaussianSurface(mean, cov, T)
