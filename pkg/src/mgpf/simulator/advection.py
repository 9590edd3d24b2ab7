"""Stochastic advection-diffusion source model for synthetic PM fields.

Arrays are indexed ``X[i, j]`` with ``i`` along x and ``j`` along y, on the
lattice ``x_i = L + i * dx``.  Spatial differences copy edge values, so the
boundary is zero-gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InstabilityError(FloatingPointError):
    """Non-finite values appeared during time stepping."""


class DegenerateRescaleError(ValueError):
    """Cropped field is constant, so it cannot be rescaled."""


@dataclass(frozen=True)
class AdvectionConfig:
    lower: float = -0.2
    upper: float = 1.2
    n_lattice: int = 141
    dt: float = 0.01
    decay: float = 10.0
    n_steps: int = 500
    n_initial: int = 5
    spawn_every: int = 10
    cluster_prob: float = 0.2
    cluster_window: tuple = (0.1, 0.3)
    crop: tuple = (0.0, 1.0)
    margin: float = 0.02
    scale_inside: tuple = (0.06, 0.1)
    scale_outside: tuple = (1.2, 2.4)
    diffusion: tuple = (0.005, 0.01)
    irregularity_amp: float = 0.3
    irregularity_freq: float = 3.0
    irregularity_noise: float = 0.1
    smoothing_passes: int = 3
    out_range: tuple = (3.0, 253.0)

    @property
    def dx(self) -> float:
        return (self.upper - self.lower) / (self.n_lattice - 1)

    @property
    def coords(self) -> np.ndarray:
        return self.lower + self.dx * np.arange(self.n_lattice)

    def crop_index(self) -> np.ndarray:
        c = self.coords
        tol = 1e-9 * (self.upper - self.lower)
        return np.flatnonzero((c >= self.crop[0] - tol) & (c <= self.crop[1] + tol))


@dataclass
class PlumeSource:
    center: tuple
    sx: float
    sy: float
    theta: float
    amplitude: float
    t0: int
    lifetime: int
    diffusion: float
    footprint: np.ndarray = field(repr=False)   # A * B on the lattice, before fading

    def fade(self, t: int) -> float:
        age = t - self.t0
        if age < 0 or age > self.lifetime:
            return 0.0
        return 1.0 - age / self.lifetime

    def field(self, t: int) -> np.ndarray:
        return self.fade(t) * self.footprint


def wind(t) -> tuple[float, float]:
    """Time-varying wind at step ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return (0.2 + 0.4 * math.sin(2 * math.pi * t / 40),
            0.09 + 0.2 * math.cos(2 * math.pi * t / 60))


def _pad(X: np.ndarray) -> np.ndarray:
    return np.pad(X, 1, mode="edge")


def laplacian(X: np.ndarray, dx: float) -> np.ndarray:
    """Five-point Laplacian with zero-gradient boundary."""
    P = _pad(X)
    return (P[2:, 1:-1] + P[:-2, 1:-1] + P[1:-1, 2:] + P[1:-1, :-2] - 4 * X) / dx ** 2


def upwind_gradient(X: np.ndarray, dx: float, vx: float, vy: float):
    P = _pad(X)
    if vx >= 0:
        gx = (X - P[:-2, 1:-1]) / dx
    else:
        gx = (P[2:, 1:-1] - X) / dx
    if vy >= 0:
        gy = (X - P[1:-1, :-2]) / dx
    else:
        gy = (P[1:-1, 2:] - X) / dx
    return gx, gy


def smooth_noise(rng: np.random.Generator, shape, passes: int = 3) -> np.ndarray:
    """White noise smoothed by repeated five-point averaging, mean 0 and sd 1."""
    xi = rng.standard_normal(shape)
    for _ in range(passes):
        P = _pad(xi)
        xi = (xi + P[2:, 1:-1] + P[:-2, 1:-1] + P[1:-1, 2:] + P[1:-1, :-2]) / 5.0
    xi = xi - xi.mean()
    sd = xi.std()
    return xi / sd if sd > 0 else xi


def sample_amplitude(rng: np.random.Generator, size=None):
    """Heavy-tailed source strength mixture."""
    u = rng.random(size)
    base = 1 + 9 * rng.beta(2, 5, size)
    tail = np.minimum(10 * (1 - rng.random(size)) ** -0.5, 100.0)
    extreme = rng.uniform(100, 300, size)
    out = np.where(u < 0.95, base, np.where(u < 0.995, tail, extreme))
    return out if size is not None else float(out)


def n_spawn(t: int, cfg: AdvectionConfig = AdvectionConfig()) -> int:
    if t == 1:
        return cfg.n_initial
    if t > 1 and (t - 1) % cfg.spawn_every == 0:
        return 1
    return 0


def spawn_sources(t: int, rng: np.random.Generator,
                  cfg: AdvectionConfig = AdvectionConfig()) -> list[PlumeSource]:
    """New sources introduced at step ``t``."""
    c = cfg.coords
    XX, YY = np.meshgrid(c, c, indexing="ij")
    out = []
    for _ in range(n_spawn(t, cfg)):
        if rng.random() < cfg.cluster_prob:
            xs, ys = rng.uniform(*cfg.cluster_window, size=2)
        else:
            xs, ys = rng.uniform(cfg.lower, cfg.upper, size=2)
        lo, hi = cfg.lower + cfg.margin, cfg.upper - cfg.margin
        inside = lo <= xs <= hi and lo <= ys <= hi
        sx, sy = rng.uniform(*(cfg.scale_inside if inside else cfg.scale_outside), size=2)
        theta = rng.uniform(-math.pi / 4, math.pi / 4)
        amp = sample_amplitude(rng)
        diff = rng.uniform(*cfg.diffusion)
        xi = smooth_noise(rng, XX.shape, cfg.smoothing_passes)
        k = cfg.irregularity_freq
        J = 1 + cfg.irregularity_amp * np.sin(k * XX) * np.sin(k * YY) + cfg.irregularity_noise * xi
        ct, st = math.cos(theta), math.sin(theta)
        xr = ct * (XX - xs) + st * (YY - ys)
        yr = -st * (XX - xs) + ct * (YY - ys)
        B = np.exp(-xr ** 2 / (2 * sx ** 2) - yr ** 2 / (2 * sy ** 2)) * J
        out.append(PlumeSource(
            center=(float(xs), float(ys)), sx=float(sx), sy=float(sy), theta=float(theta),
            amplitude=float(amp), t0=int(t), lifetime=int(round(1 + math.hypot(sx, sy))),
            diffusion=float(diff), footprint=amp * B))
    return out


def _transport(X, S, Dmask, dx, vx, vy):
    gx, gy = upwind_gradient(X, dx, vx, vy)
    out = -vx * gx - vy * gy + S
    if Dmask is not None:
        out += Dmask * laplacian(X, dx)
    return out


def euler_step(X: np.ndarray, sources, t: int, cfg: AdvectionConfig = AdvectionConfig(),
               wind_override: tuple | None = None) -> np.ndarray:
    """Advance the field one time step.

    The explicit update is split into ``n`` equal sub-steps, with ``n`` the
    smallest integer keeping the scheme monotone.  ``n == 1`` (the plain
    single Euler step) whenever that is already stable.
    """
    if not np.all(np.isfinite(X)):
        raise InstabilityError("field has non-finite values")
    vx, vy = wind(t) if wind_override is None else wind_override
    dx, dt = cfg.dx, cfg.dt
    S = np.zeros_like(X)
    Dmask = None
    for s in sources:
        f = s.field(t)
        S += f
        peak = np.max(np.abs(f))
        if peak > 0 and s.diffusion > 0:
            Dmask = (0 if Dmask is None else Dmask) + s.diffusion * f / peak
    r_max = 0.0 if Dmask is None else float(np.max(Dmask)) * dt / dx ** 2
    courant = (abs(vx) + abs(vy)) * dt / dx
    n_sub = max(1, math.ceil(4 * r_max + courant + cfg.decay * dt - 1e-12))
    h = dt / n_sub
    # decay as a factor, so the decay-only step is exactly (1 - decay dt) X
    keep = 1.0 - h * cfg.decay
    for _ in range(n_sub):
        X = keep * X + h * _transport(X, S, Dmask, dx, vx, vy)
    if not np.all(np.isfinite(X)):
        raise InstabilityError(f"non-finite values after step {t}")
    return X


def crop_rescale(X: np.ndarray, cfg: AdvectionConfig = AdvectionConfig()) -> np.ndarray:
    """Crop to the evaluation window and map linearly onto ``cfg.out_range``."""
    idx = cfg.crop_index()
    C = X[np.ix_(idx, idx)]
    vmin, vmax = float(C.min()), float(C.max())
    if not vmax > vmin:
        raise DegenerateRescaleError("cropped field is constant")
    lo, hi = cfg.out_range
    out = lo + (C - vmin) / (vmax - vmin) * (hi - lo)
    # pin the endpoints against rounding
    out[C == vmin] = lo
    out[C == vmax] = hi
    return out


@dataclass
class FieldStack:
    """Rescaled frames ``frames[t-1]`` for ``t = 1..T`` on the crop lattice."""

    frames: np.ndarray
    coords: np.ndarray
    n_sources: int

    def to_long(self) -> np.ndarray:
        """Rows ``(x, y, value, t)`` stacked over time."""
        T, n, _ = self.frames.shape
        XX, YY = np.meshgrid(self.coords, self.coords, indexing="ij")
        rows = [np.column_stack([XX.ravel(), YY.ravel(), self.frames[t].ravel(),
                                 np.full(n * n, t + 1.0)]) for t in range(T)]
        return np.vstack(rows)


def run(rng: np.random.Generator, cfg: AdvectionConfig = AdvectionConfig()) -> FieldStack:
    """Simulate ``cfg.n_steps`` steps from a zero field."""
    X = np.zeros((cfg.n_lattice, cfg.n_lattice))
    active: list[PlumeSource] = []
    frames = []
    total = 0
    for t in range(1, cfg.n_steps + 1):
        new = spawn_sources(t, rng, cfg)
        total += len(new)
        active = [s for s in active if t - s.t0 <= s.lifetime] + new
        X = euler_step(X, active, t, cfg)
        frames.append(crop_rescale(X, cfg))
    return FieldStack(np.array(frames), cfg.coords[cfg.crop_index()], total)
