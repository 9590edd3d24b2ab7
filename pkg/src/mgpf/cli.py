"""Command-line interface.

Subcommands: ``train-obs``, ``filter``, ``simulate``, ``evaluate`` and
``idw-baseline``.  Each reads a YAML config (paths inside it are relative to
the config file), validates every input before computing anything, and
writes its outputs to ``--out``.  Exit codes: 0 success, 2 validation
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import secrets
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from . import io
from .filtering import (AllRejectedError, ChainConfig, FilterInput, NetworkData, PriorSpec,
                        assemble_affine, default_prior, predict_summaries, run_timepoints)
from .gp_core import IllConditionedError
from .io import ValidationError
from .metrics import MetricReport, ci_percent_diff, pseudo_rmse, regcal_idw
from .obs_model import (CollocatedSeries, CovariateSpec, DegenerateVarianceError,
                        NonInvertibleError, ObsModelParams, RankDeficientError, VarForm,
                        train_obs_model)
from .presets import PRESETS, get_preset
from .simulator import advection, networks, s6

log = logging.getLogger("mgpf")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (IllConditionedError, AllRejectedError, DegenerateVarianceError,
                    advection.InstabilityError, advection.DegenerateRescaleError,
                    np.linalg.LinAlgError, FloatingPointError)
VALIDATION_ERRORS = (ValidationError, RankDeficientError, NonInvertibleError, ValueError, KeyError)


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _from_mapping(cls, d: dict | None, where: str):
    d = dict(d or {})
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {unknown}; allowed {sorted(names)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{where}: {e}") from None


def load_config(path) -> tuple[dict, Path]:
    if path is None:
        return {}, Path.cwd()
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file not found: {p}")
    try:
        cfg = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as e:
        raise ValidationError(f"{p}: invalid YAML: {e}") from None
    if not isinstance(cfg, dict):
        raise ValidationError(f"{p}: top level must be a mapping")
    return cfg, p.resolve().parent


def _path(base: Path, value, key: str, required: bool = True) -> Path | None:
    if value is None:
        if required:
            raise ValidationError(f"config: missing required path {key!r}")
        return None
    p = Path(value)
    p = p if p.is_absolute() else base / p
    if not p.exists():
        raise ValidationError(f"config: {key} file not found: {p}")
    return p


def _resolve_seed(cli_seed, cfg_seed) -> tuple[int, bool]:
    seed = cli_seed if cli_seed is not None else cfg_seed
    if seed is None:
        return secrets.randbits(63), True
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ValidationError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise ValidationError("seed must be in [0, 2**64)")
    return seed, False


def _versions() -> dict:
    return {"mgpf": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _load_model(spec, base: Path, where: str) -> ObsModelParams:
    """``preset:<name>`` or a path to a model JSON file."""
    if isinstance(spec, dict):
        if "preset" in spec:
            return get_preset(spec["preset"], spec.get("var_floor"))
        spec = spec.get("path")
    if not isinstance(spec, str):
        raise ValidationError(f"{where}: model must be 'preset:<name>' or a file path")
    if spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        if name not in PRESETS:
            raise ValidationError(f"{where}: unknown preset {name!r}; available {sorted(PRESETS)}")
        return get_preset(name)
    p = _path(base, spec, where)
    try:
        return ObsModelParams.load(p)
    except (ValueError, KeyError, TypeError) as e:
        raise ValidationError(f"{p}: invalid model file: {e}") from None


def _prepare_out(out) -> Path:
    if out is None:
        raise ValidationError("--out is required")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# train-obs
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    collocated: str | None = None
    var_collocated: str | None = None
    preset: str | None = None
    covariates: list = field(default_factory=list)
    interactions: list = field(default_factory=list)
    var_form: str = "log_linear"
    var_floor: float | None = None
    gls: bool = True
    debias: bool = False
    model_name: str = "model.json"
    seed: int | None = None


def _collocated_series(path: Path) -> CollocatedSeries:
    c = io.read_collocated(path)
    return CollocatedSeries(x=c["reference"], y=c["reading"],
                            z={k: c[k] for k in ("rh", "temp", "weekend")},
                            time=np.array(c["timestamp"]))


def cmd_train_obs(args, cfg: dict, base: Path) -> int:
    tc = _from_mapping(TrainConfig, cfg, "train-obs config")
    if tc.preset is not None:
        if tc.preset not in PRESETS:
            raise ValidationError(f"unknown preset {tc.preset!r}; available {sorted(PRESETS)}")
        out = _prepare_out(args.out)
        model = get_preset(tc.preset, tc.var_floor)
        diag = {"source": f"preset:{tc.preset}"}
    else:
        coll = _path(base, tc.collocated, "collocated")
        var_path = _path(base, tc.var_collocated, "var_collocated", required=False)
        try:
            spec = CovariateSpec(tuple(tc.covariates), tuple(tc.interactions))
            form = VarForm(tc.var_form)
        except ValueError as e:
            raise ValidationError(f"train-obs config: {e}") from None
        data = _collocated_series(coll)
        vdata = None if var_path is None else _collocated_series(var_path)
        out = _prepare_out(args.out)
        model, diag = train_obs_model(data, spec, form, var_data=vdata, var_floor=tc.var_floor,
                                      gls=tc.gls, debias=tc.debias)
    model.save(out / tc.model_name)
    io.write_json(out / "diagnostics.json", diag)
    for k, v in sorted(diag.items()):
        print(f"{k}: {v}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# filter
# ---------------------------------------------------------------------------

@dataclass
class PriorOverrides:
    mu_scale: float | None = None
    sigma2_max: float | None = None
    nugget_max: float | None = None
    phi_min: float | None = None
    phi_max: float | None = None


@dataclass
class FilterConfig:
    sites: str | None = None
    measurements: str | None = None
    reference: str | None = None
    grid: str | None = None
    models: dict = field(default_factory=dict)
    primary_network: str | None = None
    chain: dict = field(default_factory=dict)
    prior: dict = field(default_factory=dict)
    level: float = 0.95
    write_draws: bool = False
    timestamps: list | None = None
    seed: int | None = None
    workers: int = 1


@dataclass
class _Timepoint:
    timestamp: str
    inp: FilterInput
    prior: PriorSpec


def _build_timepoints(fc: FilterConfig, base: Path):
    sites = io.read_sites(_path(base, fc.sites, "sites"))
    meas = io.read_measurements(_path(base, fc.measurements, "measurements"), sites)
    ref_path = _path(base, fc.reference, "reference", required=False)
    refs = [] if ref_path is None else io.read_reference(ref_path, sites)
    grid_ids, grid = (None, None)
    if fc.grid is not None:
        grid_ids, grid = io.read_grid(_path(base, fc.grid, "grid"))
    nets_seen = []
    for m in meas:
        if m.network_id not in nets_seen:
            nets_seen.append(m.network_id)
    missing = [n for n in nets_seen if n not in fc.models]
    if missing:
        raise ValidationError(f"no observation model configured for network(s) {missing}")
    models = {n: _load_model(fc.models[n], base, f"models.{n}") for n in nets_seen}
    if fc.primary_network is not None and fc.primary_network not in models:
        raise ValidationError(f"primary_network {fc.primary_network!r} has no data")
    prior_over = _from_mapping(PriorOverrides, fc.prior, "prior")
    if not 0 < fc.level < 1:
        raise ValidationError("level must be in (0, 1)")

    idx = sites.index()
    order: list = []
    by_ts: dict = {}
    for m in meas:
        if m.timestamp not in by_ts:
            order.append(m.timestamp)
            by_ts[m.timestamp] = ([], [])
        by_ts[m.timestamp][0].append(m)
    for sid, ts, v in refs:
        if ts not in by_ts:
            order.append(ts)
            by_ts[ts] = ([], [])
        by_ts[ts][1].append((sid, v))
    if fc.timestamps is not None:
        wanted = [str(t) for t in fc.timestamps]
        unknown = [t for t in wanted if t not in by_ts]
        if unknown:
            raise ValidationError(f"timestamps not present in the data: {unknown[:5]}")
        order = wanted

    tps, skipped = [], []
    for ts in order:
        ms, rs = by_ts[ts]
        rs = [(s, v) for s, v in rs if not math.isnan(v)]
        nets = []
        for net in nets_seen:
            model = models[net]
            rows = [m for m in ms if m.network_id == net and not math.isnan(m.reading)
                    and all(not math.isnan(m.covariates[c]) for c in model.covariates)]
            seen = set()
            for m in rows:
                if m.site_id in seen:
                    raise ValidationError(f"duplicate measurement for site {m.site_id!r} at {ts!r}")
                seen.add(m.site_id)
            if not rows:
                continue
            nets.append(NetworkData(
                net, sites.coords[[idx[m.site_id] for m in rows]],
                np.array([m.reading for m in rows]), model,
                covariates={c: np.array([m.covariates[c] for m in rows])
                            for c in model.covariates} or None,
                site_ids=tuple(m.site_id for m in rows)))
        if not nets and not rs:
            skipped.append({"timestamp": ts, "reason": "no low-cost or reference data"})
            log.warning("skipping timepoint %s: no low-cost or reference data", ts)
            continue
        inp = FilterInput(sites.coords[[idx[s] for s, _ in rs]].reshape(-1, 2),
                          np.array([v for _, v in rs]), tuple(nets), grid,
                          ref_ids=tuple(s for s, _ in rs))
        assemble_affine(inp)        # surfaces non-invertible gains before any MCMC
        prior = default_prior(inp, fc.primary_network)
        over = {k: v for k, v in asdict(prior_over).items() if v is not None}
        if over:
            try:
                prior = replace(prior, **over)
            except ValueError as e:
                raise ValidationError(f"prior: {e}") from None
        tps.append(_Timepoint(ts, inp, prior))
    return tps, skipped, sites, grid_ids


def cmd_filter(args, cfg: dict, base: Path) -> int:
    fc = _from_mapping(FilterConfig, cfg, "filter config")
    chain = _from_mapping(ChainConfig, fc.chain, "chain")
    seed, auto = _resolve_seed(args.seed, fc.seed)
    workers = args.workers if args.workers is not None else fc.workers
    tps, skipped, sites, grid_ids = _build_timepoints(fc, base)
    out = _prepare_out(args.out)
    if auto:
        log.info("no seed given; generated seed %d", seed)

    fits = run_timepoints([t.inp for t in tps], [t.prior for t in tps], chain, seed,
                          workers=max(1, int(workers)))

    idx = sites.index()
    pred_rows, hyper_rows, draw_rows, per_tp = [], [], [], []
    for tp, pf in zip(tps, fits):
        inp = tp.inp
        summ = pf.summaries(fc.level)
        for j, sid in enumerate(inp.ref_ids):
            x, y = inp.ref_sites[j]
            v = inp.ref_values[j]
            pred_rows.append((tp.timestamp, sid, "reference", io.REFERENCE_NETWORK, x, y, v, v, v))
        m, lo, hi = summ["lc"]
        for j, sid in enumerate(pf.lc_ids):
            x, y = sites.coords[idx[sid]]
            pred_rows.append((tp.timestamp, sid, "lc", pf.network_of[j], x, y, m[j], lo[j], hi[j]))
        if "grid" in summ:
            m, lo, hi = summ["grid"]
            for j, gid in enumerate(grid_ids):
                x, y = inp.grid[j]
                pred_rows.append((tp.timestamp, gid, "grid", "", x, y, m[j], lo[j], hi[j]))
        for name, (hm, hl, hh) in pf.hyper_summary(fc.level).items():
            hyper_rows.append((tp.timestamp, name, hm, hl, hh, pf.acceptance.get(name)))
        if fc.write_draws:
            ids = list(pf.lc_ids) + (list(grid_ids) if pf.grid_samples is not None else [])
            D = pf.x_samples if pf.grid_samples is None else np.hstack([pf.x_samples,
                                                                         pf.grid_samples])
            for k in range(D.shape[0]):
                for j, sid in enumerate(ids):
                    draw_rows.append((tp.timestamp, sid, k, D[k, j]))
        per_tp.append({"timestamp": tp.timestamp, "n_lc": inp.n_lc,
                       "n_reference": len(inp.ref_values), "prior": asdict(tp.prior),
                       "acceptance": pf.acceptance, "warnings": pf.warnings})

    io.write_csv(out / "predictions.csv", io.PREDICTION_COLUMNS, pred_rows)
    io.write_csv(out / "hyperparameters.csv",
                 ("timestamp", "parameter", "mean", "lower", "upper", "acceptance"), hyper_rows)
    if fc.write_draws:
        io.write_csv(out / "draws.csv", ("timestamp", "site_id", "draw", "value"), draw_rows)
    io.write_json(out / "metadata.json", {
        "command": "filter", "seed": seed, "seed_generated": auto,
        "config": cfg, "config_digest": io.digest(cfg), "chain": asdict(chain),
        "level": fc.level, "versions": _versions(), "timepoints": per_tp, "skipped": skipped})
    n_warn = sum(len(t["warnings"]) for t in per_tp)
    print(f"filtered {len(tps)} timepoints ({len(skipped)} skipped, {n_warn} sampler warnings)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# idw-baseline
# ---------------------------------------------------------------------------

@dataclass
class IdwConfig:
    sites: str | None = None
    measurements: str | None = None
    grid: str | None = None
    models: dict = field(default_factory=dict)
    power: float = 2.0
    seed: int | None = None


def cmd_idw_baseline(args, cfg: dict, base: Path) -> int:
    ic = _from_mapping(IdwConfig, cfg, "idw-baseline config")
    if not ic.power > 0:
        raise ValidationError("power must be > 0")
    fc = FilterConfig(sites=ic.sites, measurements=ic.measurements, grid=ic.grid,
                      models=ic.models)
    tps, skipped, sites, grid_ids = _build_timepoints(fc, base)
    out = _prepare_out(args.out)
    rows = []
    for tp in tps:
        inp = tp.inp
        if not inp.networks:
            skipped.append({"timestamp": tp.timestamp, "reason": "no low-cost data"})
            continue
        nets = [(n.sites, n.readings, n.covariates, n.model) for n in inp.networks]
        targets = [(sid, "lc", n.network_id, s) for n in inp.networks
                   for sid, s in zip(n.site_ids, n.sites)]
        if inp.grid is not None:
            targets += [(gid, "grid", "", s) for gid, s in zip(grid_ids, inp.grid)]
        pts = np.array([t[3] for t in targets])
        pred = regcal_idw(nets, pts, ic.power)
        for (sid, kind, net, s), v in zip(targets, pred):
            rows.append((tp.timestamp, sid, kind, net, s[0], s[1], v, None, None))
    io.write_csv(out / "predictions.csv", io.PREDICTION_COLUMNS, rows)
    io.write_json(out / "metadata.json", {
        "command": "idw-baseline", "config": cfg, "config_digest": io.digest(cfg),
        "power": ic.power, "versions": _versions(), "skipped": skipped})
    print(f"interpolated {len(tps)} timepoints")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

@dataclass
class EvalConfig:
    truth: str | None = None
    methods: dict = field(default_factory=dict)
    joint_method: str | None = None
    kinds: list = field(default_factory=lambda: ["lc", "grid"])
    level: float = 0.95
    pseudo: dict | None = None
    seed: int | None = None


@dataclass
class PseudoConfig:
    reference: str | None = None
    sites: str | None = None
    radius: float = 0.1


def cmd_evaluate(args, cfg: dict, base: Path) -> int:
    ec = _from_mapping(EvalConfig, cfg, "evaluate config")
    if not ec.methods:
        raise ValidationError("evaluate config: no methods given")
    if ec.truth is None and ec.pseudo is None:
        raise ValidationError("evaluate config: truth file is required (or a pseudo block)")
    truth = None if ec.truth is None else io.read_truth(_path(base, ec.truth, "truth"))
    preds, draws = {}, {}
    for name, spec in ec.methods.items():
        if isinstance(spec, str):
            spec = {"predictions": spec}
        rows = io.read_predictions(_path(base, spec.get("predictions"), f"methods.{name}"))
        preds[name] = [r for r in rows if r["kind"] in ec.kinds]
        dpath = _path(base, spec.get("draws"), f"methods.{name}.draws", required=False)
        draws[name] = None if dpath is None else io.read_draws(dpath)
    if ec.joint_method is not None and ec.joint_method not in preds:
        raise ValidationError(f"joint_method {ec.joint_method!r} is not among the methods")
    if truth is not None:
        for name, rows in preds.items():
            miss = [(r["timestamp"], r["site_id"]) for r in rows
                    if (r["timestamp"], r["site_id"]) not in truth]
            if miss:
                raise ValidationError(f"method {name}: no truth for {len(miss)} rows, e.g. {miss[0]}")
    pseudo = None
    if ec.pseudo is not None:
        pc = _from_mapping(PseudoConfig, ec.pseudo, "pseudo")
        ptab = io.read_sites(_path(base, pc.sites, "pseudo.sites"))
        pref = io.read_reference(_path(base, pc.reference, "pseudo.reference"), ptab)
        pseudo = (pc, ptab, pref)
    out = _prepare_out(args.out)

    report = MetricReport()
    if truth is not None:
        for name, rows in preds.items():
            by_ts: dict = {}
            for r in rows:
                by_ts.setdefault(r["timestamp"], []).append(r)
            for ts, rs in by_ts.items():
                y = np.array([truth[(ts, r["site_id"])] for r in rs])
                mean = np.array([r["mean"] for r in rs])
                lo = np.array([r["lower"] for r in rs])
                hi = np.array([r["upper"] for r in rs])
                samples = None
                if draws[name] is not None:
                    samples = np.column_stack([draws[name][(ts, r["site_id"])] for r in rs])
                if samples is None and np.any(np.isnan(lo)):
                    report.add(name, ts, y, mean, lower=mean, upper=mean)
                    report.rows[-1].update(crps=math.nan, coverage=math.nan, width=math.nan,
                                           interval_score=math.nan)
                else:
                    report.add(name, ts, y, mean, samples=samples, lower=lo, upper=hi,
                               level=ec.level)
    report.to_csv(out / "metrics.csv")

    ci_rows = []
    if ec.joint_method is not None:
        joint = {(r["timestamp"], r["site_id"]): r for r in preds[ec.joint_method]}
        for name, rows in preds.items():
            if name == ec.joint_method:
                continue
            for r in rows:
                j = joint.get((r["timestamp"], r["site_id"]))
                if j is None or math.isnan(r["lower"]) or math.isnan(j["lower"]):
                    continue
                l1, l2 = r["upper"] - r["lower"], j["upper"] - j["lower"]
                if l1 <= 0:
                    continue
                ci_rows.append((r["timestamp"], r["site_id"], r["kind"], name, l2, l1,
                                ci_percent_diff(l2, l1)))
    io.write_csv(out / "ci_percent_diff.csv",
                 ("timestamp", "site_id", "kind", "single_method", "joint_length",
                  "single_length", "percent_diff"), ci_rows)

    if pseudo is not None:
        pc, ptab, pref = pseudo
        pidx = ptab.index()
        prow = []
        for name, rows in preds.items():
            by_ts: dict = {}
            for r in rows:
                by_ts.setdefault(r["timestamp"], []).append(r)
            for sid, ts, v in pref:
                if math.isnan(v) or ts not in by_ts:
                    continue
                rs = [r for r in by_ts[ts] if r["site_id"] != sid]
                pts = np.array([(r["x"], r["y"]) for r in rs]).reshape(-1, 2)
                try:
                    val = pseudo_rmse([r["mean"] for r in rs], pts, ptab.coords[pidx[sid]], v,
                                      pc.radius)
                except ValueError:
                    continue
                prow.append((name, ts, sid, val))
        io.write_csv(out / "pseudo_rmse.csv", ("method", "timestamp", "reference_site",
                                               "pseudo_rmse"), prow)
    io.write_json(out / "metadata.json", {"command": "evaluate", "config": cfg,
                                          "config_digest": io.digest(cfg),
                                          "versions": _versions()})
    for name, s in report.summary().items():
        print(name, " ".join(f"{k}={v:.4g}" for k, v in s.items()))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@dataclass
class SimulateConfig:
    mode: str = "s5"
    advection: dict = field(default_factory=dict)
    s6: dict = field(default_factory=dict)
    preferential: bool = True
    grid_n: int = 21
    write_field: bool = False
    n_train: int = 2000
    seed: int | None = None


UNSTATED_DEFAULTS = {
    "s5": ["irregularity noise: white noise, 3 five-point smoothing passes, unit sd",
           "truth at sensors: bilinear interpolation on the cropped lattice",
           "explicit step split into stable sub-steps when the single step is not monotone"],
    "s6": ["ambient mean 2 + 35 Beta(2, 5); spatial variance 2 mu Beta(2, 5)",
           "nugget 0.1 sigma2 Beta(2, 5); correlation at the diagonal U(0.5, 0.9)",
           "emissions 20 + 200 Beta(2, 5); source influence halves at distance 0.5",
           "sensor error terms are variances: var0 + var1 * x",
           "relative humidity U(30, 90)"],
}


def _ts(t: int) -> str:
    return f"t{t:04d}"


def _simulate_s5(sc: SimulateConfig, rng, out: Path) -> dict:
    acfg = _from_mapping(advection.AdvectionConfig, _tuplify(sc.advection), "advection")
    c = acfg.coords[acfg.crop_index()]
    if c.size < 2 or not np.allclose([c[0], c[-1]], acfg.crop, atol=1e-9):
        raise ValidationError(f"advection: lattice of {acfg.n_lattice} nodes on "
                              f"[{acfg.lower}, {acfg.upper}] has no nodes at the crop bounds "
                              f"{acfg.crop}")
    stack = advection.run(rng, acfg)
    nets = networks.generate_networks_s5(rng)
    gid, grid = io.regular_grid(0.0, 1.0, sc.grid_n)
    T = stack.frames.shape[0]
    site_rows, meas_rows, ref_rows, truth_rows = [], [], [], []
    colocated = {}
    for k, net in enumerate(nets, start=1):
        name = f"net{k}"
        truth = networks.interpolate_frames(stack.frames, stack.coords, net.sites)
        y = networks.synth_obs(truth, net.spec, rng)
        ids = [f"{name}-{i:03d}" for i in range(net.spec.n)]
        ref_id = f"ref-{name}"
        colocated[name] = {"sensor": ids[net.colocated], "reference_site": ref_id}
        for i, sid in enumerate(ids):
            if i != net.colocated:
                site_rows.append((sid, name, *net.sites[i]))
        site_rows.append((ref_id, io.REFERENCE_NETWORK, *net.sites[net.colocated]))
        for t in range(T):
            ts = _ts(t + 1)
            for i, sid in enumerate(ids):
                if i == net.colocated:
                    continue
                meas_rows.append((sid, name, ts, y[t, i], None, None, None))
                truth_rows.append((ts, sid, truth[t, i]))
            ref_rows.append((ref_id, ts, truth[t, net.colocated]))
        io.write_csv(out / f"collocated_{name}.csv", io.COLLOCATED_COLUMNS,
                     [(_ts(t + 1), truth[t, net.colocated], y[t, net.colocated], None, None, None)
                      for t in range(T)])
    gtruth = networks.interpolate_frames(stack.frames, stack.coords, grid)
    for t in range(T):
        for j, g in enumerate(gid):
            truth_rows.append((_ts(t + 1), g, gtruth[t, j]))
    io.write_csv(out / "sites.csv", io.SITES_COLUMNS, site_rows)
    io.write_csv(out / "measurements.csv", io.MEASUREMENT_COLUMNS, meas_rows)
    io.write_csv(out / "reference.csv", io.REFERENCE_COLUMNS, ref_rows)
    io.write_csv(out / "truth.csv", io.TRUTH_COLUMNS, truth_rows)
    io.write_csv(out / "grid.csv", io.GRID_COLUMNS, [(g, *p) for g, p in zip(gid, grid)])
    if sc.write_field:
        io.write_csv(out / "truth_field.csv", ("x", "y", "value", "t"), stack.to_long())
    return {"advection": asdict(acfg), "n_sources": stack.n_sources, "colocated": colocated,
            "networks": {f"net{k}": asdict(n.spec) for k, n in enumerate(nets, start=1)}}


def _tuplify(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in (d or {}).items()}


def _simulate_s6(sc: SimulateConfig, rng, out: Path) -> dict:
    raw = _tuplify(sc.s6)
    for key in ("obs_a", "obs_b"):
        if key in raw:
            raw[key] = _from_mapping(s6.S6ObsSpec, raw[key], f"s6.{key}")
    cfg = _from_mapping(s6.S6Config, raw, "s6")
    ds = s6.generate_s6_dataset(rng, cfg, sc.preferential)
    gid = [f"g{i:04d}" for i in range(len(ds.grid))]
    site_rows = [("ref", io.REFERENCE_NETWORK, *ds.ref_site[0])]
    meas_rows, truth_rows, ref_rows = [], [], []
    T = ds.truth_grid.shape[0]
    for net in ("A", "B"):
        ids = [f"{net}-{i:03d}" for i in range(len(ds.sites[net]))]
        site_rows += [(sid, net, *p) for sid, p in zip(ids, ds.sites[net])]
        for t in range(T):
            for i, sid in enumerate(ids):
                meas_rows.append((sid, net, _ts(t + 1), ds.readings[net][t, i],
                                  ds.rh[net][t, i], None, None))
                truth_rows.append((_ts(t + 1), sid, ds.truth_sites[net][t, i]))
        spec = cfg.obs_a if net == "A" else cfg.obs_b
        x, y, rh = s6.generate_training(rng, sc.n_train, spec, cfg)
        io.write_csv(out / f"collocated_{net}.csv", io.COLLOCATED_COLUMNS,
                     [(f"train{i:05d}", x[i], y[i], rh[i], None, None) for i in range(len(x))])
    for t in range(T):
        ref_rows.append(("ref", _ts(t + 1), max(ds.truth_ref[t, 0], 0.0)))
        for j, g in enumerate(gid):
            truth_rows.append((_ts(t + 1), g, ds.truth_grid[t, j]))
    io.write_csv(out / "sites.csv", io.SITES_COLUMNS, site_rows)
    io.write_csv(out / "measurements.csv", io.MEASUREMENT_COLUMNS, meas_rows)
    io.write_csv(out / "reference.csv", io.REFERENCE_COLUMNS, ref_rows)
    io.write_csv(out / "truth.csv", io.TRUTH_COLUMNS, truth_rows)
    io.write_csv(out / "grid.csv", io.GRID_COLUMNS, [(g, *p) for g, p in zip(gid, ds.grid)])
    nB = int(np.sum((ds.sites["B"][:, 0] <= 0.5) & (ds.sites["B"][:, 1] >= 0.5)))
    return {"s6": asdict(cfg), "preferential": sc.preferential,
            "network_B_sites_in_top_left": nB}


def cmd_simulate(args, cfg: dict, base: Path) -> int:
    sc = _from_mapping(SimulateConfig, cfg, "simulate config")
    if sc.mode not in ("s5", "s6"):
        raise ValidationError(f"mode must be 's5' or 's6', got {sc.mode!r}")
    seed, auto = _resolve_seed(args.seed, sc.seed)
    out = _prepare_out(args.out)
    rng = np.random.default_rng(seed)
    info = _simulate_s5(sc, rng, out) if sc.mode == "s5" else _simulate_s6(sc, rng, out)
    io.write_json(out / "manifest.json", {
        "command": "simulate", "mode": sc.mode, "seed": seed, "seed_generated": auto,
        "config": cfg, "config_digest": io.digest(cfg), "versions": _versions(),
        "unstated_defaults": UNSTATED_DEFAULTS[sc.mode], **info})
    print(f"simulated {sc.mode} dataset into {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

COMMANDS = {
    "train-obs": (cmd_train_obs, "fit or export an observation model"),
    "filter": (cmd_filter, "run the multi-network GP filter per timepoint"),
    "simulate": (cmd_simulate, "generate a synthetic dataset"),
    "evaluate": (cmd_evaluate, "score predictions against truth or a reference proxy"),
    "idw-baseline": (cmd_idw_baseline, "per-network inversion followed by IDW"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgpf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mgpf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--seed", type=int, help="64-bit seed (generated and recorded if absent)")
        sp.add_argument("--workers", type=int, help="worker processes")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg, base = load_config(args.config)
        return func(args, cfg, base)
    except NUMERICAL_ERRORS as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
