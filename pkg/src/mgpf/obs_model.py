"""Per-network observation models.

A low-cost reading is modelled as ``y = a(z) + b(z) * x + eps`` with
``a(z) = beta0 + z . beta2`` and ``b(z) = beta1 + z_int . beta3``, where
``z_int`` is the subset of covariates that interact with the true
concentration ``x``.  The error variance ``tau2(x)`` is one of

* ``log_linear``:      log(tau2) = alpha0 + alpha1 * log(max(x, 0) + 1)
* ``linear_clamped``:  tau2 = max(0, alpha0 + alpha1 * x)
* ``homoscedastic``:   tau2 = alpha0

and is never allowed below ``var_floor``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import qr

log = logging.getLogger(__name__)

MIN_GAIN = 1e-6


class VarForm(str, Enum):
    LOG_LINEAR = "log_linear"
    LINEAR_CLAMPED = "linear_clamped"
    HOMOSCEDASTIC = "homoscedastic"


class RankDeficientError(ValueError):
    """Design matrix is not of full column rank."""


class NonInvertibleError(ValueError):
    """Effective slope too close to zero to invert the observation model."""


class DegenerateVarianceError(ValueError):
    """Residuals carry no variance information."""


@dataclass(frozen=True)
class CovariateSpec:
    """Which covariates enter the mean, and which of them interact with x."""

    covariates: tuple[str, ...] = ()
    interactions: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "interactions", tuple(self.interactions))
        missing = set(self.interactions) - set(self.covariates)
        if missing:
            raise ValueError(f"interaction terms without main effect: {sorted(missing)}")

    @property
    def n_coef(self) -> int:
        return 2 + len(self.covariates) + len(self.interactions)

    def column_names(self) -> list[str]:
        return (["intercept", "x"] + list(self.covariates)
                + [f"x:{c}" for c in self.interactions])


@dataclass(frozen=True)
class ObsModelParams:
    beta: tuple[float, ...]
    covariates: tuple[str, ...] = ()
    interactions: tuple[str, ...] = ()
    var_form: VarForm = VarForm.HOMOSCEDASTIC
    alpha0: float = 1.0
    alpha1: float = 0.0
    var_floor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "interactions", tuple(self.interactions))
        object.__setattr__(self, "var_form", VarForm(self.var_form))
        spec = self.spec  # validates interactions
        if len(self.beta) != spec.n_coef:
            raise ValueError(
                f"beta has {len(self.beta)} entries, expected {spec.n_coef} for "
                f"covariates={self.covariates} interactions={self.interactions}")
        if self.beta[1] == 0:
            raise ValueError("slope coefficient beta1 must be nonzero")
        if not self.var_floor >= 0:
            raise ValueError("var_floor must be >= 0")

    @property
    def spec(self) -> CovariateSpec:
        return CovariateSpec(self.covariates, self.interactions)

    def _split(self):
        p, q = len(self.covariates), len(self.interactions)
        b = np.asarray(self.beta)
        return b[0], b[1], b[2:2 + p], b[2 + p:2 + p + q]

    def offset_gain(self, z=None, n: int | None = None):
        """Effective offset ``a`` and gain ``b`` for covariate rows ``z``.

        ``z`` is a mapping of covariate name to value(s), or an array whose
        columns follow ``self.covariates``.  ``n`` sets the number of rows
        when the model has no covariates.
        """
        b0, b1, b2, b3 = self._split()
        Z = covariate_matrix(z, self.covariates, n)
        if Z.shape[1] == 0:
            n = Z.shape[0]
            return np.full(n, b0), np.full(n, b1)
        a = b0 + Z @ b2
        idx = [self.covariates.index(c) for c in self.interactions]
        g = b1 + Z[:, idx] @ b3 if idx else np.full(len(a), b1)
        return a, g

    def tau2(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.var_form is VarForm.LOG_LINEAR:
            v = np.exp(self.alpha0 + self.alpha1 * np.log1p(np.maximum(x, 0.0)))
        elif self.var_form is VarForm.LINEAR_CLAMPED:
            v = np.maximum(0.0, self.alpha0 + self.alpha1 * x)
        else:
            v = np.full_like(x, self.alpha0)
        return np.maximum(v, self.var_floor)

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"] = list(self.beta)
        d["covariates"] = list(self.covariates)
        d["interactions"] = list(self.interactions)
        d["var_form"] = self.var_form.value
        d["coefficient_names"] = self.spec.column_names()
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ObsModelParams":
        keys = {"beta", "covariates", "interactions", "var_form", "alpha0", "alpha1",
                "var_floor"}
        missing = {"beta"} - set(d)
        if missing:
            raise ValueError(f"model file missing keys: {sorted(missing)}")
        return cls(**{k: d[k] for k in keys if k in d})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ObsModelParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


def covariate_matrix(z, names: Sequence[str], n: int | None = None) -> np.ndarray:
    """Coerce covariates to an ``(n, len(names))`` float array."""
    names = tuple(names)
    if not names and n is not None:
        return np.zeros((n, 0))
    if z is None:
        if names:
            raise ValueError(f"covariates {names} required")
        return np.zeros((1, 0))
    if isinstance(z, Mapping):
        if not names:
            n = max((np.size(v) for v in z.values()), default=1)
            return np.zeros((n, 0))
        missing = [c for c in names if c not in z]
        if missing:
            raise ValueError(f"missing covariates: {missing}")
        cols = [np.atleast_1d(np.asarray(z[c], dtype=float)) for c in names]
        return np.column_stack(cols)
    Z = np.asarray(z, dtype=float)
    if Z.ndim == 0:
        Z = Z.reshape(1, 1)
    elif Z.ndim == 1:
        Z = Z.reshape(1, -1) if len(names) > 1 or Z.size == len(names) else Z.reshape(-1, 1)
    if Z.shape[1] != len(names):
        if len(names) == 0:
            return np.zeros((Z.shape[0], 0))
        raise ValueError(f"covariate array has {Z.shape[1]} columns, expected {len(names)}")
    return Z


def design_matrix(x, z, spec: CovariateSpec) -> np.ndarray:
    """Columns (1, x, z..., x*z_int...)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    Z = covariate_matrix(z, spec.covariates) if spec.covariates else np.zeros((len(x), 0))
    if Z.shape[0] != len(x):
        raise ValueError("covariate rows do not match x")
    idx = [spec.covariates.index(c) for c in spec.interactions]
    return np.column_stack([np.ones_like(x), x, Z, x[:, None] * Z[:, idx]])


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    n, p = X.shape
    if n <= p:
        raise RankDeficientError(f"{n} rows is not more than {p} coefficients")
    _, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, p) * np.finfo(float).eps * 1e3 if diag.size else 0
    rank = int(np.sum(diag > tol))
    if rank < p:
        bad = [names[i] for i in piv[rank:]]
        raise RankDeficientError(f"design matrix rank {rank} < {p}; collinear columns: {bad}")


def fit_regression(x, y, z=None, spec: CovariateSpec = CovariateSpec(),
                   weights=None) -> np.ndarray:
    """(Weighted) least-squares fit of ``y`` on ``(1, x, z, x*z_int)``."""
    X = design_matrix(x, z, spec)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) != X.shape[0]:
        raise ValueError("x and y lengths differ")
    _check_rank(X, spec.column_names())
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=float).reshape(-1))
        X, y = X * w[:, None], y * w
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


def fit_variance_model(residuals, x, form: VarForm | str = VarForm.LOG_LINEAR,
                       debias: bool = False) -> tuple[float, float]:
    """Fit ``(alpha0, alpha1)`` of an error-variance model to residuals.

    For the log form, ``log(residual**2)`` is regressed on ``log(max(x, 0) + 1)``.
    ``debias=True`` adds ``E[log chi2_1]^-1`` so that ``exp(alpha0 + ...)`` is
    a mean variance rather than a geometric-mean one.
    """
    form = VarForm(form)
    r = np.asarray(residuals, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(r) != len(x):
        raise ValueError("residuals and x lengths differ")
    if len(r) < 3:
        raise ValueError("need at least 3 observations")
    r2 = r ** 2
    if not np.any(r2 > 0):
        raise DegenerateVarianceError("all residuals are zero")
    if form is VarForm.HOMOSCEDASTIC:
        return float(np.mean(r2)), 0.0
    if form is VarForm.LOG_LINEAR:
        keep = r2 > 0
        if keep.sum() < 3:
            raise DegenerateVarianceError("fewer than 3 nonzero residuals")
        u = np.log1p(np.maximum(x[keep], 0.0))
        v = np.log(r2[keep])
        A = np.column_stack([np.ones_like(u), u])
        (a0, a1), *_ = np.linalg.lstsq(A, v, rcond=None)
        if debias:
            # E[log chi2_1] = -(euler_gamma + log 2)
            a0 += np.euler_gamma + np.log(2.0)
        return float(a0), float(a1)
    A = np.column_stack([np.ones_like(x), x])
    (a0, a1), *_ = np.linalg.lstsq(A, r2, rcond=None)
    return float(a0), float(a1)


def gls_refit(x, y, z, spec: CovariateSpec, var_model: ObsModelParams) -> np.ndarray:
    """Weighted least squares with weights ``1 / tau2(x)`` from ``var_model``."""
    tau2 = var_model.tau2(np.maximum(np.asarray(x, dtype=float), 0.0))
    if np.any(tau2 <= 0):
        raise DegenerateVarianceError("variance model gives non-positive tau2; set a floor")
    return fit_regression(x, y, z, spec, weights=1.0 / tau2)


def eval_obs_model(x, z, p: ObsModelParams):
    """Expected reading and error variance at true concentration ``x``."""
    a, b = p.offset_gain(z)
    x = np.asarray(x, dtype=float)
    mean = a + b * x
    tau2 = p.tau2(x)
    if np.ndim(x) == 0 and mean.size == 1:
        return float(mean.reshape(-1)[0]), float(np.reshape(tau2, -1)[0])
    return mean, tau2


def invert_obs_model(y, z, p: ObsModelParams, return_flag: bool = False):
    """Naive calibration ``(y - a) / b``; negatives are returned unclamped.

    With ``return_flag`` a boolean array marking negative estimates is also
    returned.
    """
    a, b = p.offset_gain(z)
    if np.any(np.abs(b) < MIN_GAIN):
        bad = np.flatnonzero(np.abs(b) < MIN_GAIN).tolist()
        raise NonInvertibleError(f"effective slope below {MIN_GAIN:g} at rows {bad}")
    y = np.asarray(y, dtype=float)
    est = (y - a) / b
    if np.ndim(y) == 0 and est.size == 1:
        est = float(est.reshape(-1)[0])
    if return_flag:
        return est, np.asarray(est) < 0
    return est


@dataclass
class CollocatedSeries:
    x: np.ndarray
    y: np.ndarray
    z: dict = field(default_factory=dict)
    time: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        self.z = {k: np.asarray(v, dtype=float).reshape(-1) for k, v in self.z.items()}
        n = len(self.x)
        if len(self.y) != n or any(len(v) != n for v in self.z.values()):
            raise ValueError("collocated series columns have unequal lengths")

    def dropna(self, covariates: Sequence[str] = ()) -> tuple["CollocatedSeries", int]:
        """Drop rows with missing x, y or any of ``covariates``."""
        ok = np.isfinite(self.x) & np.isfinite(self.y)
        for c in covariates:
            if c not in self.z:
                raise ValueError(f"covariate {c!r} not in collocated data")
            ok &= np.isfinite(self.z[c])
        dropped = int((~ok).sum())
        if dropped:
            log.info("dropped %d rows with missing values", dropped)
        t = None if self.time is None else np.asarray(self.time)[ok]
        return CollocatedSeries(self.x[ok], self.y[ok],
                                {k: v[ok] for k, v in self.z.items()}, t), dropped


def train_obs_model(data: CollocatedSeries, spec: CovariateSpec = CovariateSpec(),
                    var_form: VarForm | str = VarForm.LOG_LINEAR,
                    var_data: CollocatedSeries | None = None,
                    var_floor: float | None = None, gls: bool = True,
                    debias: bool = False) -> tuple[ObsModelParams, dict]:
    """Full training protocol: OLS mean, variance model, optional GLS refit.

    ``var_data`` lets the variance model be trained on a different window
    than the regression coefficients; its residuals are taken against the
    OLS mean.  The floor defaults to the homoscedastic OLS residual variance
    of the mean-training window.
    """
    var_form = VarForm(var_form)
    data, dropped = data.dropna(spec.covariates)
    zc = {c: data.z[c] for c in spec.covariates}
    beta = fit_regression(data.x, data.y, zc, spec)
    X = design_matrix(data.x, zc, spec)
    resid = data.y - X @ beta
    dof = max(len(resid) - spec.n_coef, 1)
    naive_tau2 = float(resid @ resid / dof)
    floor = naive_tau2 if var_floor is None else float(var_floor)

    vdata, vdropped = (data, 0) if var_data is None else var_data.dropna(spec.covariates)
    vz = {c: vdata.z[c] for c in spec.covariates}
    vres = vdata.y - design_matrix(vdata.x, vz, spec) @ beta
    a0, a1 = fit_variance_model(vres, vdata.x, var_form, debias=debias)
    model = ObsModelParams(tuple(beta), spec.covariates, spec.interactions, var_form,
                           a0, a1, floor)
    if gls and var_form is not VarForm.HOMOSCEDASTIC:
        beta = gls_refit(data.x, data.y, zc, spec, model)
        model = replace(model, beta=tuple(beta))
        resid = data.y - X @ beta

    ss_tot = float(np.sum((data.y - data.y.mean()) ** 2))
    diag = {
        "n": int(len(data.x)),
        "dropped_rows": dropped + vdropped,
        "r2": 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else float("nan"),
        "naive_tau2": naive_tau2,
        "residual_mean": float(resid.mean()),
        "residual_sd": float(resid.std(ddof=1)) if len(resid) > 1 else float("nan"),
        "residual_min": float(resid.min()),
        "residual_max": float(resid.max()),
    }
    return model, diag
