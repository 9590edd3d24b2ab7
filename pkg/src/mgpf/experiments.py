"""Simulation experiments shared by the scripts and the acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .filtering import ChainConfig, FilterInput, NetworkData, mcmc_filter, timepoint_seed
from .metrics import ci_percent_diff, interval_metrics, point_metrics, pseudo_rmse, regcal_idw
from .obs_model import CollocatedSeries, CovariateSpec, ObsModelParams, VarForm, \
    invert_obs_model, train_obs_model
from .simulator import advection, networks, s6


# ---------------------------------------------------------------------------
# GP + point-source experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class S6ExperimentConfig:
    n_datasets: int = 10
    preferential: bool = True
    n_train: int = 2000
    chain: ChainConfig = ChainConfig(3000, 1000, 2)  # 3000 fits; full chain exceeds the hour
    pseudo_radius: float = 0.1
    var_floor: float | None = None      # None: OLS residual variance
    debias: bool = False
    sim: s6.S6Config = s6.S6Config()


@dataclass
class S6Result:
    grid_err: dict = field(default_factory=lambda: {"AB": [], "A": [], "B": []})
    site_pct: list = field(default_factory=list)
    grid_pct: list = field(default_factory=list)
    pseudo: dict = field(default_factory=lambda: {"MGPF": [], "RegCal": []})

    def summary(self) -> dict:
        out = {}
        for k, errs in self.grid_err.items():
            e = np.concatenate(errs)
            out[f"bias_{k}"] = float(np.mean(e))
            out[f"rmse_{k}"] = float(np.sqrt(np.mean(e ** 2)))
        out["ci_pct_sites"] = float(np.mean(np.concatenate(self.site_pct)))
        out["ci_pct_grid"] = float(np.mean(np.concatenate(self.grid_pct)))
        for k, v in self.pseudo.items():
            out[f"pseudo_rmse_{k}"] = float(np.sqrt(np.mean(np.square(v))))
        return out


def train_s6_model(rng: np.random.Generator, spec: s6.S6ObsSpec, cfg: s6.S6Config,
                   n: int, var_floor: float | None = None,
                   debias: bool = False) -> ObsModelParams:
    x, y, rh = s6.generate_training(rng, n, spec, cfg)
    data = CollocatedSeries(x=x, y=y, z={"rh": rh})
    model, _ = train_obs_model(data, CovariateSpec(("rh",)), VarForm.LOG_LINEAR,
                               var_floor=var_floor, debias=debias)
    return model


def s6_inputs(ds: s6.S6Dataset, t: int, models: dict) -> FilterInput:
    nets = tuple(NetworkData(k, ds.sites[k], ds.readings[k][t], models[k],
                             covariates={"rh": ds.rh[k][t]}) for k in ("A", "B"))
    return FilterInput(ds.ref_site, ds.truth_ref[t], nets, grid=ds.grid)


def _widths(draws):
    lo, hi = np.quantile(draws, [0.025, 0.975], axis=0)
    return hi - lo


def run_s6(cfg: S6ExperimentConfig, seed: int, n_timepoints: int | None = None,
           progress=None) -> S6Result:
    """Two-network and single-network filters on simulated datasets."""
    res = S6Result()
    root = np.random.SeedSequence(seed)
    for d, child in enumerate(root.spawn(cfg.n_datasets)):
        rng = np.random.default_rng(child)
        ds = s6.generate_s6_dataset(rng, cfg.sim, cfg.preferential)
        models = {k: train_s6_model(rng, spec, cfg.sim, cfg.n_train, cfg.var_floor, cfg.debias)
                  for k, spec in (("A", cfg.sim.obs_a), ("B", cfg.sim.obs_b))}
        T = ds.truth_grid.shape[0] if n_timepoints is None else n_timepoints
        for t in range(T):
            inp = s6_inputs(ds, t, models)
            fits = {}
            for j, key in enumerate(("AB", "A", "B")):
                sub = inp if key == "AB" else inp.subset([key])
                fits[key] = mcmc_filter(sub, cfg=cfg.chain,
                                        seed=timepoint_seed(seed, (d * 100000 + t) * 3 + j))
            truth_g = ds.truth_grid[t]
            for key, pf in fits.items():
                res.grid_err[key].append(pf.grid_samples.mean(axis=0) - truth_g)
            # interval length changes at network sites and on the grid
            ab_w = _widths(fits["AB"].x_samples)
            gw = _widths(fits["AB"].grid_samples)
            n_a = ds.sites["A"].shape[0]
            for k, sl in (("A", slice(0, n_a)), ("B", slice(n_a, None))):
                res.site_pct.append(ci_percent_diff(ab_w[sl], _widths(fits[k].x_samples)))
                res.grid_pct.append(ci_percent_diff(gw, _widths(fits[k].grid_samples)))
            # pseudo-RMSE around the reference site
            pts = np.vstack([ds.grid, ds.sites["A"], ds.sites["B"]])
            mg = np.concatenate([fits["AB"].grid_samples.mean(axis=0),
                                 fits["AB"].x_samples.mean(axis=0)])
            rc = regcal_idw([(ds.sites[k], ds.readings[k][t], {"rh": ds.rh[k][t]}, models[k])
                             for k in ("A", "B")], pts)
            ref = float(ds.truth_ref[t, 0])
            res.pseudo["MGPF"].append(pseudo_rmse(mg, pts, ds.ref_site, ref, cfg.pseudo_radius))
            res.pseudo["RegCal"].append(pseudo_rmse(rc, pts, ds.ref_site, ref, cfg.pseudo_radius))
            if progress:
                progress(d, t)
    return res


# ---------------------------------------------------------------------------
# advection-diffusion experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class S5ExperimentConfig:
    n_lattice: int = 71
    n_steps: int = 200
    n_train: int = 160
    eval_n: int = 21                # evaluation grid is eval_n x eval_n on the unit square
    chain: ChainConfig = ChainConfig()
    sim: advection.AdvectionConfig = advection.AdvectionConfig()
    networks: tuple = networks.DEFAULT_S5_SPECS

    def advection_config(self) -> advection.AdvectionConfig:
        return replace(self.sim, n_lattice=self.n_lattice, n_steps=self.n_steps)


@dataclass
class S5Data:
    stack: advection.FieldStack
    nets: list
    readings: list                  # (T, n_k) per network
    truth_sites: list               # (T, n_k) per network
    eval_grid: np.ndarray
    truth_grid: np.ndarray          # (T, m)


def simulate_s5(cfg: S5ExperimentConfig, seed: int) -> S5Data:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    stack = advection.run(rng, cfg.advection_config())
    nets = networks.generate_networks_s5(rng, cfg.networks)
    truth = [networks.interpolate_frames(stack.frames, stack.coords, n.sites) for n in nets]
    readings = [networks.synth_obs(t, n.spec, rng) for t, n in zip(truth, nets)]
    g = np.linspace(0.0, 1.0, cfg.eval_n)
    XX, YY = np.meshgrid(g, g, indexing="ij")
    grid = np.column_stack([XX.ravel(), YY.ravel()])
    tg = networks.interpolate_frames(stack.frames, stack.coords, grid)
    return S5Data(stack, nets, readings, truth, grid, tg)


def train_s5_models(data: S5Data, n_train: int) -> list[ObsModelParams]:
    """Homoscedastic linear models from each network's colocated sensor."""
    models = []
    for net, y, x in zip(data.nets, data.readings, data.truth_sites):
        c = net.colocated
        series = CollocatedSeries(x=x[:n_train, c], y=y[:n_train, c], z={})
        m, _ = train_obs_model(series, CovariateSpec(), VarForm.HOMOSCEDASTIC)
        models.append(m)
    return models


def s5_inputs(data: S5Data, t: int, models, which=(0, 1)) -> FilterInput:
    """Both colocated references are always used; colocated sensors are dropped."""
    ref_sites = np.vstack([n.sites[n.colocated] for n in data.nets])
    ref_vals = np.array([x[t, n.colocated] for n, x in zip(data.nets, data.truth_sites)])
    nets = []
    for k in which:
        n = data.nets[k]
        keep = np.arange(n.sites.shape[0]) != n.colocated
        nets.append(NetworkData(f"net{k + 1}", n.sites[keep], data.readings[k][t, keep],
                                models[k]))
    return FilterInput(ref_sites, ref_vals, tuple(nets), grid=data.eval_grid)


S5_METHODS = {"MGPF": (0, 1), "net1": (0,), "net2": (1,)}


@dataclass
class S5Result:
    per_time: dict = field(default_factory=lambda: {k: [] for k in S5_METHODS})
    sq_err: dict = field(default_factory=lambda: {k: [] for k in S5_METHODS})
    eval_grid: np.ndarray | None = None

    def summary(self) -> dict:
        out = {}
        for k, rows in self.per_time.items():
            arr = np.array(rows)
            for j, name in enumerate(("rmse", "mae", "coverage", "width", "interval_score",
                                      "crps")):
                out[f"{name}_{k}"] = float(arr[:, j].mean())
        ll = self.lower_left()
        for k in self.sq_err:
            e = np.array(self.sq_err[k])
            out[f"rmse_lower_left_{k}"] = float(np.sqrt(e[:, ll].mean()))
            out[f"rmse_elsewhere_{k}"] = float(np.sqrt(e[:, ~ll].mean()))
        return out

    def lower_left(self) -> np.ndarray:
        g = self.eval_grid
        return (g[:, 0] < 0.5) & (g[:, 1] < 0.5)


def run_s5(cfg: S5ExperimentConfig, seed: int, progress=None) -> S5Result:
    """Joint and single-network filters on the held-out advection frames."""
    data = simulate_s5(cfg, seed)
    models = train_s5_models(data, cfg.n_train)
    res = S5Result(eval_grid=data.eval_grid)
    for t in range(cfg.n_train, cfg.n_steps):
        truth = data.truth_grid[t]
        for j, (key, which) in enumerate(S5_METHODS.items()):
            pf = mcmc_filter(s5_inputs(data, t, models, which), cfg=cfg.chain,
                             seed=timepoint_seed(seed, t * 3 + j))
            mean = pf.grid_samples.mean(axis=0)
            rmse, mae, _ = point_metrics(mean, truth)
            cov, width, score, crps = interval_metrics(truth, samples=pf.grid_samples)
            res.per_time[key].append((rmse, mae, cov, width, score, crps))
            res.sq_err[key].append((mean - truth) ** 2)
        if progress:
            progress(t)
    return res


# ---------------------------------------------------------------------------
# observation-model training range
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RangeExperimentConfig:
    n_train: int = 2000
    n_test: int = 100
    n_reps: int = 40
    x_max: float = 240.0
    x_shape: tuple = (0.7, 5.0)     # concentrations are x_max * Beta(x_shape)
    range_fraction: float = 1 / 3
    var_intercept: float = 0.1      # true tau2 = var_intercept + var_slope * x
    var_slope: float = 2.0
    beta: tuple = (-10.97, 1.91, 0.16)
    rh_range: tuple = (30.0, 90.0)
    debias: bool = True


@dataclass
class RangeResult:
    tau2_high: dict                 # fitted tau2 at x_max per replicate
    rmse: dict                      # naive-inversion test RMSE per replicate
    true_tau2_high: float

    def summary(self) -> dict:
        full, small = np.array(self.tau2_high["full"]), np.array(self.tau2_high["small"])
        rf, rs = np.mean(self.rmse["full"]), np.mean(self.rmse["small"])
        return {
            "tau2_ratio_median": float(np.median(small / full)),
            "tau2_full_median": float(np.median(full)),
            "tau2_small_median": float(np.median(small)),
            "tau2_true": self.true_tau2_high,
            "rmse_full": float(rf),
            "rmse_small": float(rs),
            "rmse_rel_change": float(abs(rs - rf) / rf),
        }


def _range_draw(rng, n, hi, cfg: RangeExperimentConfig) -> CollocatedSeries:
    x = hi * rng.beta(*cfg.x_shape, size=n)
    rh = rng.uniform(*cfg.rh_range, size=n)
    sd = np.sqrt(cfg.var_intercept + cfg.var_slope * x)
    b0, b1, b2 = cfg.beta
    y = b0 + b1 * x + b2 * rh + sd * rng.standard_normal(n)
    return CollocatedSeries(x=x, y=y, z={"rh": rh})


def run_range_experiment(cfg: RangeExperimentConfig, seed: int) -> RangeResult:
    """Train on the full test range and on a reduced range, compare tau2 and RMSE."""
    tau2 = {"full": [], "small": []}
    rmse = {"full": [], "small": []}
    spec = CovariateSpec(("rh",))
    for child in np.random.SeedSequence(seed).spawn(cfg.n_reps):
        rng = np.random.default_rng(child)
        test = _range_draw(rng, cfg.n_test, cfg.x_max, cfg)
        for key, hi in (("full", cfg.x_max), ("small", cfg.x_max * cfg.range_fraction)):
            model, _ = train_obs_model(_range_draw(rng, cfg.n_train, hi, cfg), spec,
                                       VarForm.LOG_LINEAR, var_floor=0.0, debias=cfg.debias)
            tau2[key].append(float(model.tau2(np.array([cfg.x_max]))[0]))
            est = invert_obs_model(test.y, test.z, model)
            rmse[key].append(point_metrics(est, test.x)[0])
    return RangeResult(tau2, rmse, cfg.var_intercept + cfg.var_slope * cfg.x_max)
