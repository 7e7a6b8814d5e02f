from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special
from scipy.stats import norm

from biortho.errors import DecayError, NoRepresentationError, ValidationError
from biortho.fredholm import (FredholmReport, deformed_density, deformed_one_point, det_H, det_K, det_L,
                              det_L_hat, det_matrix_form, gap_probability, laplace_transform, log_derivative,
                              mu_sigma, zero_temperature_sweep)
from biortho.kernels import eval_L, make_context, trace_integral
from biortho.models import make_symbol
from biortho.sigma import SigmaSpec

OY2 = dict(N=2, a=[0.0, 0.2], tau=1.0)
GUE1 = dict(N=1, a=[0.0], tau=1.0)


def _ctx(kind, params, **kw):
    return make_context(make_symbol(kind, params), **kw)


@pytest.fixture(scope="module")
def oy2():
    return _ctx("OY", OY2)


@pytest.fixture(scope="module")
def gue1():
    return _ctx("GUEext", GUE1)


# ------------------------------------------------------------------ trivial limits

@pytest.mark.parametrize("kind,params", [
    ("OY", OY2), ("GUEext", dict(N=2, a=[0.0, 0.0], tau=1.0)), ("LUEext", dict(N=2, b=[0.0, 0.3], nu=1)),
    ("LogGamma", dict(n=4, N=2, alpha=1.0, a=[0.0, 0.1])),
])
def test_zero_sigma_gives_one(kind, params):
    rep = mu_sigma(_ctx(kind, params), SigmaSpec.zero())
    assert rep.values() and all(v == 1.0 for v in rep.values().values())


def test_fermi_far_left_gives_one(oy2):
    rep = laplace_transform("OY", OY2, -30.0)
    assert all(abs(v - 1.0) < 1e-6 for v in rep.values().values())
    assert abs(det_K(oy2, -30.0) - 1.0) < 1e-6


def test_loggamma_single_far_left():
    rep = laplace_transform("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]), -30.0)
    assert abs(rep.value - 1.0) < 1e-9


# ------------------------------------------------------------------ closed forms

@pytest.mark.parametrize("t", [-1.5, 0.0, 0.7, 2.0])
def test_gue_single_indicator(gue1, t):
    assert abs(det_matrix_form(gue1, SigmaSpec.indicator(-t)) - norm.cdf(-t)) < 1e-12
    assert abs(det_L(gue1, SigmaSpec.indicator(-t)) - norm.cdf(-t)) < 1e-10


@pytest.mark.parametrize("s", [0.3, 1.0, 4.0])
def test_lue_single_indicator(s):
    ctx = _ctx("LUEext", dict(N=1, b=[0.0], nu=1))
    ref = 1 - (1 + s) * math.exp(-s)
    assert abs(det_L(ctx, SigmaSpec.indicator(s)) - ref) < 1e-10
    assert abs(gap_probability("LUEext", dict(N=1, b=[0.0], nu=1), s) - ref) < 1e-10


def test_loggamma_single_laplace_true_value():
    # Z = 1/Gamma(1) variable: E exp(-e^t Z) = 2 sqrt(s) K_1(2 sqrt(s)), s = e^t
    for t in (-2.0, 0.0, 2.0):
        ref = integrate.quad(lambda y: math.exp(-math.exp(t) / y - y), 0, np.inf, epsabs=1e-13)[0]
        rep = laplace_transform("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]), t)
        assert abs(rep.value - ref) < 1e-9


def test_single_ginibre_gap_is_laguerre():
    # N = 2, weight e^{-s}: Hankel determinant of incomplete moments
    for s in (0.5, 1.0, 3.0):
        inc = np.array([[special.gamma(i + j + 1) * special.gammainc(i + j + 1, s) for j in range(2)]
                        for i in range(2)])
        full = np.array([[special.gamma(i + j + 1) for j in range(2)] for i in range(2)])
        ref = np.linalg.det(inc) / np.linalg.det(full)
        assert abs(gap_probability("GinibreProduct", dict(N=2, nus=[0.0]), s) - ref) < 1e-9


def test_glue_single_against_quadrature():
    # Y = X + sqrt(tau) G with X ~ Exp(1); P(Y <= 0)
    ref = integrate.quad(lambda m: math.exp(-m) * norm.cdf(-m), 0, np.inf, epsabs=1e-13)[0]
    val = gap_probability("GLUEext", dict(N=1, b=[0.0], tau=1.0), 0.0)
    assert abs(val - ref) < 1e-9


# ------------------------------------------------------------------ representations

@pytest.mark.parametrize("t", [-2.0, 0.0, 2.0])
def test_oy_four_representations(oy2, t):
    rep = mu_sigma(oy2, SigmaSpec.fermi(t))
    assert set(rep.values()) == {"matrix", "L", "H", "K"}
    assert rep.consensus < 1e-6
    for name, err in rep.refinement_error.items():
        assert err < 1e-8, name


def test_frozen_oy_values(oy2):
    # cross-representation consensus values, stable to 1e-9
    frozen = {-2.0: 0.7998405570, 0.0: 0.3049238546, 2.0: 0.0139060994}
    for t, v in frozen.items():
        assert abs(mu_sigma(oy2, SigmaSpec.fermi(t)).value - v) < 1e-9


def test_H_matches_L_with_indicator(oy2):
    s = SigmaSpec.indicator(0.5)
    assert abs(det_H(oy2, s) - det_L(oy2, s)) < 1e-8


def test_K_needs_decay():
    ctx = _ctx("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]))
    with pytest.raises(DecayError):
        det_K(ctx, 0.0)
    rep = mu_sigma(ctx, SigmaSpec.fermi(0.0))
    assert rep.K_value is None and "K" in rep.excluded


def test_report_record_and_errors():
    rep = FredholmReport()
    with pytest.raises(NoRepresentationError):
        _ = rep.value
    with pytest.raises(ValidationError):
        mu_sigma(_ctx("OY", OY2), SigmaSpec.fermi(0.0), representations=("bogus",))
    rec = laplace_transform("OY", dict(N=1, a=[0.0], tau=1.0), 0.0).as_record()
    assert {"matrix_value", "consensus", "flags", "excluded"} <= set(rec)


def test_polymer_and_matrix_model_lists():
    with pytest.raises(ValidationError):
        laplace_transform("GUEext", GUE1, 0.0)
    with pytest.raises(ValidationError):
        gap_probability("OY", OY2, 0.0)
    with pytest.raises(ValidationError):
        gap_probability("LUEext", dict(N=1, b=[0.0], nu=1), -1.0)
    with pytest.raises(ValidationError):
        det_L_hat(_ctx("GinibreProduct", dict(N=2, nus=[0.0])), 0.0)


def test_custom_sigma_matches_fermi(oy2):
    f = SigmaSpec.fermi(0.3)
    custom = SigmaSpec.custom(lambda x: 1 / (1 + np.exp(-x - 0.3)), 1.0)
    assert abs(det_L(oy2, custom) - det_L(oy2, f)) < 1e-10


# ------------------------------------------------------------------ support edges, monotonicity

def test_indicator_edges(gue1):
    # sigma = 1_{x > s}: nothing above a far-right s, everything above a far-left s
    assert abs(det_L(gue1, SigmaSpec.indicator(12.0)) - 1.0) < 1e-8
    assert abs(det_L(gue1, SigmaSpec.indicator(-12.0))) < 1e-6
    ctx = _ctx("OY", OY2)
    assert abs(det_L(ctx, SigmaSpec.indicator(15.0)) - 1.0) < 1e-8
    assert abs(det_L(ctx, SigmaSpec.indicator(-15.0))) < 1e-6


@settings(max_examples=15)
@given(st.lists(st.floats(-4, 4), min_size=2, max_size=5, unique=True))
def test_laplace_monotone_in_t(ts):
    ctx = _ctx("OY", dict(N=1, a=[0.0], tau=1.0))
    ts = sorted(ts)
    vals = [det_matrix_form(ctx, SigmaSpec.fermi(t)) for t in ts]
    assert all(-1e-8 <= v <= 1 + 1e-8 for v in vals)
    assert all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))


def test_gap_probability_monotone():
    s = np.linspace(-3, 4, 8)
    vals = [gap_probability("GUEext", dict(N=2, a=[0.0, 0.5], tau=1.0), x) for x in s]
    assert all(-1e-8 <= v <= 1 + 1e-8 for v in vals)
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))


# ------------------------------------------------------------------ deformed measure

def test_undeformed_one_point_is_kernel_diagonal(oy2):
    x = np.array([-1.0, 0.0, 1.5])
    k = deformed_one_point(oy2, SigmaSpec.zero(), 0.0, x)
    assert np.allclose(k, np.diag(eval_L(oy2, x, x)), atol=1e-14)
    assert abs(trace_integral(oy2) - 2.0) < 1e-6


def test_far_left_deformation_is_undeformed(oy2):
    x = np.array([-1.0, 0.0, 1.5])
    k = deformed_density(oy2, SigmaSpec.fermi(0.0), -30.0, x)
    assert np.max(np.abs(k - np.diag(eval_L(oy2, x, x)))) < 1e-6


def test_deformed_density_integrates_to_N(oy2):
    # the reweighted measure is again an N-point measure
    xs = np.linspace(-20, 20, 641)
    k = deformed_density(oy2, SigmaSpec.fermi(0.0), 0.0, xs)
    assert abs(np.trapezoid(k, xs) - 2.0) < 1e-6


@pytest.mark.parametrize("t", [-1.0, 0.0, 1.0])
def test_log_derivative_matches_finite_difference(oy2, t):
    h = 1e-3
    fd = (math.log(det_L(oy2, SigmaSpec.fermi(t + h))) - math.log(det_L(oy2, SigmaSpec.fermi(t - h)))) / (2 * h)
    ld = log_derivative(oy2, SigmaSpec.fermi(0.0), t)
    assert abs(ld - fd) < 1e-4 * abs(fd)


def test_log_derivative_indicator_is_hazard(gue1):
    # mu(t) = Phi(-t) for sigma = 1_{x > -t}; d/dt log mu = -phi(0)/Phi(0) at t = 0
    assert abs(log_derivative(gue1, SigmaSpec.indicator(0.0), 0.0) + norm.pdf(0) / norm.cdf(0)) < 1e-9
    for t in (-1.0, 1.0):
        ref = -norm.pdf(-t) / norm.cdf(-t)
        assert abs(log_derivative(gue1, SigmaSpec.indicator(0.0), t) - ref) < 1e-8


def test_log_derivative_custom(oy2):
    custom = SigmaSpec.custom(lambda x: 1 / (1 + np.exp(-x)), 1.0,
                              deriv=lambda x: np.exp(-x) / (1 + np.exp(-x)) ** 2)
    ref = log_derivative(oy2, SigmaSpec.fermi(0.0), 0.5)
    assert abs(log_derivative(oy2, custom, 0.5) - ref) < 1e-8
    with pytest.raises(ValidationError):
        log_derivative(oy2, SigmaSpec.custom(lambda x: 1 / (1 + np.exp(-x)), 1.0), 0.0)


def test_log_derivative_zero_sigma(oy2):
    assert log_derivative(oy2, SigmaSpec.zero(), 0.3) == 0.0


# ------------------------------------------------------------------ zero temperature

def test_oy_sweep_limit_column():
    rows = zero_temperature_sweep("OY", dict(N=1, a=[0.0], tau=1.0), -1.0, [0.5, 0.2, 0.1, 0.05])
    assert all(abs(r["limit_value"] - norm.cdf(1.0)) < 1e-10 for r in rows)
    d = [r["difference"] for r in rows]
    assert all(b < a for a, b in zip(d, d[1:])) and d[-1] < 5e-2


def test_sweep_far_left_both_one():
    rows = zero_temperature_sweep("OY", dict(N=1, a=[0.0], tau=1.0), -30.0, [0.5])
    assert abs(rows[0]["limit_value"] - 1.0) < 1e-9
    assert abs(rows[0]["polymer_value"] - 1.0) < 1e-9


def test_sweep_validation():
    with pytest.raises(ValidationError):
        zero_temperature_sweep("OY", dict(N=1), 0.0, [])
    with pytest.raises(ValidationError):
        zero_temperature_sweep("OY", dict(N=1), 0.0, [0.1, 0.2])
    with pytest.raises(ValidationError):
        zero_temperature_sweep("GUEext", dict(N=1), 0.0, [0.1])


def test_gue_two_particles_against_joint_density():
    # eigenvalue density of 2x2 GUE is proportional to (x - y)^2 e^{-(x^2 + y^2)/2}
    f = lambda y, x: (x - y) ** 2 * math.exp(-(x * x + y * y) / 2)
    Z = integrate.dblquad(f, -20, 20, -20, 20)[0]
    for s in (0.0, 1.0):
        ref = integrate.dblquad(f, -20, s, -20, s, epsabs=1e-13)[0] / Z
        assert abs(gap_probability("GUEext", dict(N=2, a=[0.0, 0.0], tau=1.0), s) - ref) < 1e-10
