import math

import numpy as np
import pytest

from mgpf.simulator import advection as A
from mgpf.simulator import networks as N
from mgpf.simulator import s6

SMALL = A.AdvectionConfig(n_lattice=36, n_steps=40)


def test_wind_values():
    assert A.wind(0) == pytest.approx((0.2, 0.29))
    assert A.wind(10)[0] == pytest.approx(0.6)
    assert A.wind(30)[1] == pytest.approx(-0.11)


def test_decay_only_step_is_exact():
    X = np.random.default_rng(0).random((20, 20)) * 50
    out = A.euler_step(X, [], t=3, wind_override=(0.0, 0.0))
    assert np.array_equal(out, 0.9 * X)


def test_uniform_field_has_no_transport():
    X = np.full((15, 15), 7.0)
    gx, gy = A.upwind_gradient(X, 0.01, 0.3, -0.2)
    assert np.all(gx == 0) and np.all(gy == 0)
    assert np.all(A.laplacian(X, 0.01) == 0)


def test_upwind_direction():
    X = np.outer(np.arange(5.0), np.ones(5))        # increases along axis 0
    gx_pos, _ = A.upwind_gradient(X, 1.0, 1.0, 0.0)
    gx_neg, _ = A.upwind_gradient(X, 1.0, -1.0, 0.0)
    assert gx_pos[0, 0] == 0 and gx_pos[2, 2] == 1      # backward difference
    assert gx_neg[4, 0] == 0 and gx_neg[2, 2] == 1      # forward difference


def test_spawn_schedule():
    assert [A.n_spawn(t) for t in (1, 2, 11, 12, 21)] == [5, 0, 1, 0, 1]
    rng = np.random.default_rng(1)
    assert len(A.spawn_sources(1, rng, SMALL)) == 5
    assert len(A.spawn_sources(11, rng, SMALL)) == 1
    assert len(A.spawn_sources(12, rng, SMALL)) == 0


def test_source_invariants_and_fade():
    rng = np.random.default_rng(2)
    for s in A.spawn_sources(1, rng, SMALL) + A.spawn_sources(1, rng, SMALL):
        assert s.lifetime >= 1 and s.amplitude > 0
        assert 0.005 <= s.diffusion <= 0.01 and abs(s.theta) <= math.pi / 4
        assert s.lifetime == round(1 + math.hypot(s.sx, s.sy))
        assert s.fade(s.t0) == 1.0 and s.fade(s.t0 + s.lifetime) == 0.0
        assert np.all(s.field(s.t0 + s.lifetime) == 0)


def test_amplitude_mixture_against_direct_oracle():
    n = 1_000_000
    a = A.sample_amplitude(np.random.default_rng(3), n)
    # direct mixture probabilities
    for thresh, p in ((10.0, 0.05), (50.0, 0.045 * 0.04 + 0.005), (100.0, 0.005)):
        se = math.sqrt(p * (1 - p) / n)
        assert abs(np.mean(a > thresh) - p) < 3 * se
    assert a.min() >= 1.0 and a.max() <= 300.0


def test_crop_rescale_ramp_and_degenerate():
    cfg = A.AdvectionConfig(n_lattice=15)
    ramp = np.add.outer(np.arange(15.0), np.arange(15.0))
    out = A.crop_rescale(ramp, cfg)
    assert out.min() == 3.0 and out.max() == 253.0
    # rescaling is affine: equal steps in the ramp give equal steps out
    d = np.diff(out[:, 0])
    assert np.allclose(d, d[0])
    with pytest.raises(A.DegenerateRescaleError):
        A.crop_rescale(np.ones((15, 15)), cfg)


def test_instability_is_reported():
    X = np.ones((10, 10))
    X[3, 3] = np.nan
    with pytest.raises(A.InstabilityError):
        A.euler_step(X, [], t=1)


def test_small_run_frames_are_rescaled():
    stack = A.run(np.random.default_rng(4), SMALL)
    assert stack.frames.shape[0] == SMALL.n_steps
    assert np.allclose(stack.frames.min(axis=(1, 2)), 3.0, atol=1e-9)
    assert np.allclose(stack.frames.max(axis=(1, 2)), 253.0, atol=1e-9)
    assert stack.coords.min() >= 0 and stack.coords.max() <= 1
    long = stack.to_long()
    assert long.shape == (stack.frames.size, 4) and long[-1, 3] == SMALL.n_steps


def test_full_scale_single_step_would_be_unstable_but_substeps_are_not():
    cfg = A.AdvectionConfig()
    rng = np.random.default_rng(5)
    src = A.spawn_sources(1, rng, cfg)
    X = A.euler_step(np.zeros((cfg.n_lattice,) * 2), src, 1, cfg)
    assert np.all(np.isfinite(X)) and X.min() >= -1e-9


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

def test_s5_networks():
    rng = np.random.default_rng(6)
    n1, n2 = N.generate_networks_s5(rng)
    assert len(n1.sites) == 100 and len(n2.sites) == 100
    s = n2.sites
    assert not np.any((s[:, 0] < 0.5) & (s[:, 1] < 0.5))
    for net in (n1, n2):
        c = net.sites.mean(axis=0)
        dists = [math.dist(p, c) for p in net.sites]
        assert net.colocated == int(np.argmin(dists))


def test_synth_obs_noise_model():
    x = np.linspace(3, 253, 100_000)
    exact = N.synth_obs(x, N.SyntheticNetworkSpec(1, a=1, b=1.2, sigma=0), None)
    assert np.array_equal(exact, 1 + 1.2 * x)
    spec = N.SyntheticNetworkSpec(1, a=2, b=1.5, sigma=1.0)
    e = N.synth_obs(x, spec, np.random.default_rng(7)) - (2 + 1.5 * x)
    assert abs(e.mean()) < 3 / math.sqrt(len(x))
    assert e.var() == pytest.approx(1.0, rel=0.05)


def test_bilinear_interpolation_is_exact_on_planes():
    c = np.linspace(0, 1, 11)
    XX, YY = np.meshgrid(c, c, indexing="ij")
    frames = np.stack([2 * XX + 3 * YY, XX - YY])
    pts = np.random.default_rng(8).random((20, 2))
    out = N.interpolate_frames(frames, c, pts)
    assert np.allclose(out[0], 2 * pts[:, 0] + 3 * pts[:, 1])
    assert np.allclose(out[1], pts[:, 0] - pts[:, 1])


# ---------------------------------------------------------------------------
# GP + point-source generator
# ---------------------------------------------------------------------------

def test_preferential_rule():
    cfg = s6.S6Config(n_timepoints=3)
    for seed in range(5):
        ds = s6.generate_s6_dataset(np.random.default_rng(seed), cfg, preferential=True)
        b = ds.sites["B"]
        top_left = (b[:, 0] <= 0.5) & (b[:, 1] >= 0.5)
        assert top_left.sum() >= 24 and top_left[6:].all()
        lo, hi = cfg.ref_box
        assert np.all((ds.ref_site >= lo) & (ds.ref_site <= hi))


def test_s6_shapes_and_generator_floors():
    cfg = s6.S6Config(n_timepoints=20)
    ds = s6.generate_s6_dataset(np.random.default_rng(9), cfg)
    assert ds.truth_grid.shape == (20, cfg.grid_n ** 2)
    assert ds.readings["A"].shape == ds.truth_sites["A"].shape == (20, 30)
    assert np.all(ds.hyper[:, 0] >= 2.0)
    assert np.all((ds.rh["A"] >= 30) & (ds.rh["A"] <= 90))


def test_local_term_at_source_center():
    out = s6.local_term(np.array([[0.2, 0.1]]), ((0.2, 0.1),), [37.0], psi=5.0)
    assert out[0] == 37.0
    assert s6.S6Config(halving_distance=0.2).psi * 0.2 ** 2 == pytest.approx(math.log(2))


def test_network_b_noise_is_scaled_network_a_noise():
    cfg = s6.S6Config()
    x = np.linspace(0, 200, 11)
    assert np.allclose(cfg.obs_b.sd(x) / cfg.obs_a.sd(x), 1.5, rtol=0.01)
    a, b = cfg.obs_a, cfg.obs_b
    assert np.allclose([b.intercept / a.intercept, b.slope / a.slope, b.rh_coef / a.rh_coef],
                       1.5, rtol=0.05)   # published values are rounded


def test_training_pairs():
    cfg = s6.S6Config()
    x, y, rh = s6.generate_training(np.random.default_rng(10), 100, cfg.obs_a, cfg)
    assert len(x) == len(y) == len(rh) == 100
