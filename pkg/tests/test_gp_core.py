import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mgpf.gp_core import (CovParams, GaussianSurface, IllConditionedError, build_cov,
                          conditional_gp, cross_cov, exp_cov, mvn_logpdf, safe_cholesky)


def test_exp_cov_values():
    assert exp_cov(0.0, CovParams(2.0, 1.0, 0.5)) == pytest.approx(2.5)
    assert exp_cov(1.0, CovParams(1.0, 1.0)) == pytest.approx(0.367879, abs=1e-6)
    assert exp_cov(1e6, CovParams(1.0, 1.0)) == pytest.approx(0.0, abs=1e-300)


@pytest.mark.parametrize("kw", [dict(sigma2=-1, phi=1), dict(sigma2=1, phi=0),
                                dict(sigma2=1, phi=1, nugget=-0.1)])
def test_cov_params_validation(kw):
    with pytest.raises(ValueError):
        CovParams(**kw)


def test_build_cov_small_cases():
    p = CovParams(1.0, 1.0, 0.0)
    assert np.allclose(build_cov([[0.3, 0.3]], CovParams(1.0, 1.0, 0.2)), [[1.2]])
    e = math.exp(-1)
    assert np.allclose(build_cov([[0, 0], [1, 0]], p), [[1, e], [e, 1]])
    # collocated pair keeps the nugget on the diagonal only
    assert np.allclose(build_cov([[0, 0], [0, 0]], CovParams(1.0, 1.0, 0.5)),
                       [[1.5, 1.0], [1.0, 1.5]])


def test_cross_cov_adds_nugget_at_coincident_points():
    C = cross_cov([[0, 0]], [[0, 0], [1, 0]], CovParams(1.0, 1.0, 0.5))
    assert np.allclose(C, [[1.5, math.exp(-1)]])


sites_st = arrays(np.float64, st.tuples(st.integers(1, 12), st.just(2)),
                  elements=st.floats(0, 1))
params_st = st.builds(CovParams, st.floats(0.01, 50), st.floats(0.05, 20), st.floats(0, 5))


@given(sites_st, params_st)
def test_cov_symmetric_psd(sites, p):
    C = build_cov(sites, p)
    assert C.shape == (len(sites), len(sites))
    assert np.allclose(C, C.T)
    eig = np.linalg.eigvalsh(C)
    assert eig.min() >= -1e-8 * max(1.0, eig.max())


def test_safe_cholesky_jitters_singular_matrix():
    A = np.ones((3, 3))
    L = safe_cholesky(A)
    assert np.allclose(L @ L.T, A, atol=1e-3)


def test_safe_cholesky_raises_on_indefinite():
    with pytest.raises(IllConditionedError):
        safe_cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_mvn_logpdf_matches_scipy():
    from scipy.stats import multivariate_normal
    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 4))
    S = A @ A.T + np.eye(4)
    x, m = rng.normal(size=4), rng.normal(size=4)
    assert mvn_logpdf(x, m, S) == pytest.approx(multivariate_normal(m, S).logpdf(x), rel=1e-12)


def test_conditional_gp_no_conditioning_returns_prior():
    p = CovParams(2.0, 3.0, 0.1)
    T = np.array([[0.1, 0.2], [0.5, 0.5]])
    g = conditional_gp(4.0, p, np.zeros((0, 2)), [], T)
    assert np.allclose(g.mean, 4.0)
    assert np.allclose(g.cov, build_cov(T, p))


def test_conditional_gp_interpolates_exactly():
    g = conditional_gp(0.0, CovParams(1.0, 2.0), [[0.4, 0.4]], [3.0], [[0.4, 0.4]])
    assert g.mean[0] == pytest.approx(3.0)
    assert g.cov[0, 0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("d", [0.1, 0.5, 1.0, 2.5])
def test_conditional_gp_bivariate_hand_formula(d):
    g = conditional_gp(0.0, CovParams(1.0, 1.0), [[0, 0]], [1.0], [[d, 0]])
    assert g.mean[0] == pytest.approx(math.exp(-d))
    assert g.cov[0, 0] == pytest.approx(1 - math.exp(-2 * d))


def test_gaussian_surface_sampling_moments():
    rng = np.random.default_rng(1)
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    s = GaussianSurface(np.array([1.0, -1.0]), cov, np.zeros((2, 2)))
    X = s.sample(rng, 200_000)
    assert np.allclose(X.mean(0), s.mean, atol=0.02)
    assert np.allclose(np.cov(X.T), cov, atol=0.03)
    assert np.allclose(s.var, [2.0, 1.0])
