import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mgpf.metrics import (MetricReport, ci_percent_diff, crps_sample, idw_interpolate,
                          interval_metrics, point_metrics, pseudo_rmse, regcal_idw)
from mgpf.obs_model import ObsModelParams


def test_idw_examples():
    assert idw_interpolate([[0, 0], [1, 1]], [3.0, 9.0], [[1, 1]])[0] == 9.0
    assert idw_interpolate([[-1, 0], [1, 0]], [0.0, 10.0], [[0, 0]])[0] == pytest.approx(5.0)
    assert idw_interpolate([[1, 0], [2, 0]], [2.0, 8.0], [[0, 0]])[0] == pytest.approx(3.2)
    with pytest.raises(ValueError):
        idw_interpolate(np.zeros((0, 2)), [], [[0, 0]])


finite = st.floats(-100, 100)


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.just(2)), elements=st.floats(0, 1),
              unique=True),
       st.data())
def test_idw_is_a_convex_combination(sites, data):
    vals = data.draw(arrays(np.float64, len(sites), elements=finite))
    targets = data.draw(arrays(np.float64, (5, 2), elements=st.floats(0, 1)))
    out = idw_interpolate(sites, vals, targets)
    assert np.all(out >= vals.min() - 1e-9) and np.all(out <= vals.max() + 1e-9)


def test_regcal_idw_inverts_then_averages():
    m1 = ObsModelParams((1.0, 2.0))
    m2 = ObsModelParams((0.0, 0.5))
    s = np.array([[0.0, 0.0], [1.0, 0.0]])
    out = regcal_idw([(s, [3.0, 5.0], None, m1), (s, [2.0, 1.0], None, m2)], [[0.0, 0.0]])
    # network 1 inverts to (1, 2), network 2 to (4, 2); the target sits on site 0
    assert out[0] == pytest.approx((1.0 + 4.0) / 2)


def test_point_metrics_examples():
    assert point_metrics([1, 2], [1, 2]) == (0, 0, 0)
    assert point_metrics([2, 3], [1, 2]) == pytest.approx((1, 1, 1))
    assert point_metrics([0, 2], [1, 1]) == pytest.approx((1, 1, 0))
    with pytest.raises(ValueError):
        point_metrics([], [])


def _crps_brute(samples, y):
    s = np.asarray(samples)
    return np.mean(np.abs(s - y)) - 0.5 * np.mean(np.abs(s[:, None] - s[None, :]))


def test_crps_matches_pairwise_definition():
    rng = np.random.default_rng(0)
    S = rng.normal(size=(300, 4))
    y = rng.normal(size=4)
    want = [_crps_brute(S[:, j], y[j]) for j in range(4)]
    assert np.allclose(crps_sample(S, y), want, atol=1e-12)


def test_crps_matches_empirical_cdf_integral():
    rng = np.random.default_rng(2)
    s = rng.gamma(2.0, size=40)
    y = 1.3
    z = np.linspace(-5, 30, 400_001)
    F = np.searchsorted(np.sort(s), z, side="right") / len(s)
    want = np.trapezoid((F - (z >= y)) ** 2, z)
    assert crps_sample(s[:, None], [y])[0] == pytest.approx(want, abs=1e-4)


def test_crps_standard_normal_closed_form():
    S = np.random.default_rng(1).standard_normal((100_000, 1))
    want = (math.sqrt(2) - 1) / math.sqrt(math.pi)
    assert crps_sample(S, [0.0])[0] == pytest.approx(want, abs=0.01)


def test_interval_metrics_examples():
    cov, width, score, crps = interval_metrics([1.0], [0.0], [2.0])
    assert (cov, width, score) == (1.0, 2.0, 2.0) and math.isnan(crps)
    cov, width, score, crps = interval_metrics([1.0], samples=np.ones((50, 1)))
    assert (cov, width, score, crps) == (1.0, 0.0, 0.0, 0.0)
    # miss by 1 below a unit interval: 1 + (2 / 0.05) * 1
    cov, width, score, _ = interval_metrics([-1.0], [0.0], [1.0])
    assert cov == 0 and score == pytest.approx(41.0)
    with pytest.raises(ValueError):
        interval_metrics([0.0], [1.0], [0.0])


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_interval_metric_invariants(seed, n):
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(120, n)) * rng.uniform(0.1, 3)
    y = rng.normal(size=n) * 2
    cov, width, score, crps = interval_metrics(y, samples=S)
    assert 0 <= cov <= 1 and width >= 0 and score >= width - 1e-12 and crps >= 0
    rmse, mae, bias = point_metrics(S.mean(0), y)
    assert rmse >= abs(bias) - 1e-12 and rmse >= mae - 1e-12


def test_ci_percent_diff():
    assert ci_percent_diff(90, 100) == pytest.approx(-10)
    assert ci_percent_diff(100, 100) == 0
    assert ci_percent_diff(200, 100) == pytest.approx(100)
    with pytest.raises(ValueError):
        ci_percent_diff(1.0, 0.0)


def test_pseudo_rmse():
    sites = np.array([[0.0, 0.0], [0.05, 0.0], [1.0, 1.0]])
    assert pseudo_rmse([4.0], sites[:1], [0, 0], 4.0, 0.1) == 0.0
    assert pseudo_rmse([5.0, 3.0, 100.0], sites, [0, 0], 4.0, 0.1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pseudo_rmse([1.0], [[1.0, 1.0]], [0, 0], 4.0, 0.1)


def test_metric_report_csv(tmp_path):
    r = MetricReport()
    r.add("MGPF", "t1", [1.0, 2.0], [1.0, 2.0], samples=np.tile([1.0, 2.0], (100, 1)))
    r.add("MGPF", "t2", [1.0, 2.0], [2.0, 3.0], lower=[0, 0], upper=[3, 3])
    s = r.summary()["MGPF"]
    assert s["rmse"] == pytest.approx(0.5) and s["coverage"] == 1.0
    r.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0].startswith("method,timepoint,rmse") and lines[-1].startswith("MGPF,mean")
