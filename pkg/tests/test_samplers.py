from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from biortho.errors import ValidationError
from biortho.fredholm import laplace_transform
from biortho.samplers import (McEstimate, _brownian_paths, _oy_chain, block_rng, inverse_gamma, log_gamma_variate, mc_gap, mc_laplace,
                              sample_ginibre_product, sample_glue, sample_gue_ext, sample_log_Z,
                              sample_loggamma_Z, sample_lue_ext, sample_mixed_Z, sample_oy_Z)

Z3 = 3.0


def _within(est: McEstimate, value: float, k: float = Z3) -> bool:
    return abs(est.z_score(value)) <= k


def _two_sample_z(x: np.ndarray, y: np.ndarray) -> float:
    se = math.sqrt(np.var(x, ddof=1) / len(x) + np.var(y, ddof=1) / len(y))
    return (np.mean(x) - np.mean(y)) / se


# ------------------------------------------------------------------ gamma variates

@pytest.mark.parametrize("gamma", [1.5, 3.0, 10.0])
def test_inverse_gamma_ks(gamma):
    n = 100_000
    x = inverse_gamma(gamma, block_rng(1, 0), n)
    d = stats.kstest(x, stats.invgamma(gamma).cdf).statistic
    assert d < 1.63 / math.sqrt(n)


def test_inverse_gamma_moments():
    x = inverse_gamma(3.0, block_rng(2, 0), 100_000)
    m = McEstimate(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))), len(x), 2)
    assert _within(m, 0.5)
    v = (x - 0.5) ** 2
    mv = McEstimate(float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v))), len(v), 2)
    assert _within(mv, 0.25)


def test_small_shape_log_gamma_stays_finite():
    lg = log_gamma_variate(0.01, block_rng(3, 0), 10_000)
    assert np.all(np.isfinite(lg))
    # E log G = digamma(shape)
    assert abs(np.mean(lg) - special.digamma(0.01)) < 3 * np.std(lg) / 100
    with pytest.raises(ValidationError):
        log_gamma_variate(0.0, block_rng(3, 0), 3)


# ------------------------------------------------------------------ reproducibility

def test_streams_independent_of_worker_count():
    p = dict(n=3, N=2, alpha=1.5, a=[0.0, 0.2])
    a = sample_log_Z("LogGamma", p, 10_000, seed=7, workers=1)
    b = sample_log_Z("LogGamma", p, 10_000, seed=7, workers=3)
    assert np.array_equal(a, b)
    c = sample_log_Z("LogGamma", p, 10_000, seed=8, workers=1)
    assert not np.array_equal(a, c)


def test_matrix_streams_independent_of_worker_count():
    a = mc_gap("GUEext", dict(N=2, a=[0.0, 0.5], tau=1.0), 0.0, 9000, seed=5, workers=1)
    b = mc_gap("GUEext", dict(N=2, a=[0.0, 0.5], tau=1.0), 0.0, 9000, seed=5, workers=4)
    assert a == b


# ------------------------------------------------------------------ polymers

def test_partition_functions_positive():
    rng = block_rng(4, 0)
    assert np.all(sample_loggamma_Z(3, 2, [1.0, 1.2, 1.5], [0.0, 0.3], rng, 500) > 0)
    assert np.all(sample_oy_Z(2, [0.0, 0.2], 1.0, 200, rng, 500) > 0)
    assert np.all(sample_mixed_Z(2, [1.0, 1.2], [0.0, 0.1], 1.0, 200, rng, 500) > 0)
    assert sample_loggamma_Z(1, 1, [2.0], [0.0], rng) > 0


def test_loggamma_single_site_mean():
    x = sample_loggamma_Z(1, 1, [3.0], [0.0], block_rng(9, 0), 100_000)
    m = McEstimate(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))), len(x), 9)
    assert _within(m, 0.5)


def test_loggamma_single_site_laplace():
    est = mc_laplace("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]), 0.0, 100_000, seed=11)
    ref = 2 * special.k1(2.0)  # E exp(-1/G), G ~ Exp(1)
    assert _within(est, ref)
    far = mc_laplace("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]), -30.0, 100_000, seed=11)
    assert 1 - far.mean < 1e-9


def test_loggamma_two_sites_against_quadrature():
    g1, g2 = 1.5, 2.5

    def inner(x):  # E exp(-x D) for D ~ InvGamma(g2)
        return 2 * x ** (g2 / 2) * special.kv(g2, 2 * math.sqrt(x)) / special.gamma(g2)

    ref = integrate.quad(lambda x: inner(x) * stats.invgamma(g1).pdf(x), 0, np.inf, limit=200)[0]
    est = mc_laplace("LogGamma", dict(n=2, N=1, alpha=[g1, g2], a=[0.0]), 0.0, 100_000, seed=12)
    assert _within(est, ref)


def test_loggamma_recursion_small_case():
    # n = N = 2: Z = d11 d22 (d12 + d21), check against direct path sum of the same draws
    rng_a, rng_b = block_rng(13, 0), block_rng(13, 0)
    logZ = sample_loggamma_Z(2, 2, [1.5, 2.0], [0.0, 0.2], rng_a, 1, log=True)[0]
    alpha, a = np.array([1.5, 2.0]), np.array([0.0, 0.2])
    d = np.exp(-log_gamma_variate(alpha[:, None] - a[None, :], rng_b, (1, 2, 2)))[0]
    direct = d[0, 0] * d[1, 1] * (d[0, 1] + d[1, 0])
    assert abs(math.log(direct) - logZ) < 1e-12


def test_oy_single_path_against_lognormal():
    t, tau = 0.0, 1.0
    ref = integrate.quad(lambda g: math.exp(-math.exp(t + math.sqrt(tau) * g)) * stats.norm.pdf(g), -40, 40)[0]
    est = mc_laplace("OY", dict(N=1, a=[0.0], tau=tau), t, 100_000, seed=14, n_steps=100)
    assert _within(est, ref)


def test_oy_drift():
    logZ = sample_oy_Z(1, [0.3], 2.0, 100, block_rng(15, 0), 50_000, log=True)
    m = McEstimate(float(np.mean(logZ)), float(np.std(logZ, ddof=1) / math.sqrt(len(logZ))), len(logZ), 15)
    assert _within(m, 0.3 * 2.0)


def test_oy_step_doubling():
    # common random numbers: one fine path set, read at n_steps and 2 n_steps
    tau, n = 1.0, 1000
    B = _brownian_paths(2, [0.0, 0.2], tau, 2 * n, block_rng(16, 0), 20_000)
    fine = np.exp(-np.exp(_oy_chain(B, tau / (2 * n))))
    coarse = np.exp(-np.exp(_oy_chain(B[:, :, ::2], tau / n)))
    diff = coarse - fine
    se = np.std(fine, ddof=1) / math.sqrt(len(fine))
    assert abs(np.mean(diff)) < max(se, 1e-3)
    assert abs(np.mean(diff)) <= Z3 * np.std(diff, ddof=1) / math.sqrt(len(diff)) + 1e-3


def test_oy_laplace_against_fredholm():
    p = dict(N=2, a=[0.0, 0.2], tau=1.0)
    ests = mc_laplace("OY", p, [-1.0, 1.0], 20_000, seed=17, n_steps=1000)
    for t, est in zip([-1.0, 1.0], ests):
        assert _within(est, laplace_transform("OY", p, t).value)


def test_mixed_single_path_against_fredholm():
    p = dict(N=1, alpha=[1.5], a=[0.0], tau=1.0)
    ref = laplace_transform("Mixed", p, 0.0).value
    assert _within(mc_laplace("Mixed", p, 0.0, 50_000, seed=18, n_steps=200), ref)


def test_mixed_literal_index_reading_is_rejected():
    # the index reading drops the Brownian factor at N = 1 and misses the Fredholm value badly
    p = dict(N=1, alpha=[1.5], a=[0.0], tau=1.0)
    ref = laplace_transform("Mixed", p, 1.0).value
    est = mc_laplace("Mixed", p, 1.0, 20_000, seed=18, n_steps=200, reading="index")
    assert abs(est.z_score(ref)) > 5


def test_mixed_small_tau_is_loggamma():
    n = 20_000
    a = sample_log_Z("Mixed", dict(N=2, alpha=[1.5, 1.8], a=[0.0, 0.2], tau=1e-4), n, seed=19, n_steps=100)
    b = sample_log_Z("LogGamma", dict(n=2, N=2, alpha=[1.5, 1.8], a=[0.0, 0.2]), n, seed=20)
    assert abs(_two_sample_z(a, b)) <= Z3


def test_mixed_large_alpha_is_oy():
    n, al, N = 20_000, 400.0, 2
    a = sample_log_Z("Mixed", dict(N=N, alpha=[al] * N, a=[0.0, 0.2], tau=1.0), n, seed=21, n_steps=200)
    # the leading path takes the N weights of row 1, each with E log d = -digamma(alpha - a_1)
    a = a + N * special.digamma(al)
    b = sample_log_Z("OY", dict(N=N, a=[0.0, 0.2], tau=1.0), n, seed=22, n_steps=200)
    assert abs(_two_sample_z(a, b)) <= Z3


def test_mc_validation():
    with pytest.raises(ValidationError):
        mc_laplace("OY", dict(N=1, a=[0.0], tau=1.0), 0.0, 10, seed=0)
    with pytest.raises(ValidationError):
        sample_oy_Z(1, [0.0], 1.0, 50, block_rng(0, 0))
    with pytest.raises(ValidationError):
        sample_mixed_Z(1, [1.0], [0.0], 1.0, 200, block_rng(0, 0), reading="other")
    with pytest.raises(ValidationError):
        mc_gap("GUEext", dict(N=1), 0.0, 0, seed=0)


def test_estimator_bounded():
    ests = mc_laplace("LogGamma", dict(n=2, N=2, alpha=1.2, a=0.0), [-3.0, 0.0, 3.0], 2000, seed=23)
    assert all(0.0 <= e.mean <= 1.0 for e in ests)


# ------------------------------------------------------------------ matrix models

def test_gue_single():
    assert _within(mc_gap("GUEext", dict(N=1, a=[0.0], tau=1.0), 0.0, 100_000, seed=30), 0.5)
    x = sample_gue_ext(1, [2.0], 1.0, block_rng(31, 0), 100_000)[:, 0]
    m = McEstimate(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))), len(x), 31)
    assert _within(m, 2.0)


def test_gue_eigenvalues_sorted():
    x = sample_gue_ext(3, [0.0, 0.5, 1.0], 1.0, block_rng(32, 0), 100)
    assert np.all(np.diff(x, axis=1) >= 0)


def test_lue_single():
    assert _within(mc_gap("LUEext", dict(N=1, b=[0.0], nu=0), 1.0, 100_000, seed=33), 1 - math.exp(-1))
    assert _within(mc_gap("LUEext", dict(N=1, b=[0.0], nu=1), 1.0, 100_000, seed=34), 1 - 2 * math.exp(-1))
    x = sample_lue_ext(2, [0.0, 0.3], 1, block_rng(35, 0), 100)
    assert np.all(x > 0)


def test_glue_single_and_small_tau():
    ref = integrate.quad(lambda m: math.exp(-m) * stats.norm.cdf(-m), 0, np.inf)[0]
    assert _within(mc_gap("GLUEext", dict(N=1, b=[0.0], tau=1.0), 0.0, 100_000, seed=36), ref)
    est = mc_gap("GLUEext", dict(N=2, b=[0.0, 0.3], tau=1e-6), 2.0, 100_000, seed=37)
    lue = mc_gap("LUEext", dict(N=2, b=[0.0, 0.3], nu=0), 2.0, 100_000, seed=38)
    assert abs(est.mean - lue.mean) <= Z3 * math.hypot(est.stderr, lue.stderr)
    x = sample_glue(2, [0.0, 0.3], 1.0, block_rng(39, 0), 50)
    assert x.shape == (50, 2)


def test_ginibre_products_single():
    x = sample_ginibre_product(1, 1, block_rng(40, 0), 100_000)[:, 0]
    p = (x <= 1.0).astype(float)
    assert abs(np.mean(p) - (1 - math.exp(-1))) <= Z3 * np.std(p) / math.sqrt(len(p))
    y = sample_ginibre_product(1, 2, block_rng(41, 0), 100_000)[:, 0]
    q = (y <= 1.0).astype(float)
    # P(E1 E2 <= 1) = 1 - E exp(-1/E2) = 1 - 2 K_1(2)
    assert abs(np.mean(q) - (1 - 2 * special.k1(2.0))) <= Z3 * np.std(q) / math.sqrt(len(q))
    with pytest.raises(ValidationError):
        sample_ginibre_product(2, 0, block_rng(0, 0), 1)
