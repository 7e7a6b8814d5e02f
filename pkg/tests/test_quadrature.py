from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biortho.errors import TruncationError, ValidationError
from biortho.kernels import eval_L, make_context
from biortho.models import log_symbol, make_symbol
from biortho.quadrature import (build_bent_line, build_circle, build_graded_grid, build_loop, build_real_grid,
                                build_vertical_line, line_halfheight)


def test_circle_residue_of_one_over_z():
    c = build_circle(0.0, 1.0, 16, 1)
    assert abs(c.integrate(1.0 / c.nodes) / (2j * math.pi) - 1.0) < 1e-14


def test_circle_analytic_integrand_vanishes():
    c = build_circle(0.0, 1.0, 16, 1)
    assert abs(c.integrate(c.nodes)) < 1e-14


def test_circle_negative_orientation():
    c = build_circle(1.0, 0.5, 32, -1)
    assert abs(c.integrate(1.0 / (c.nodes - 1.0)) / (2j * math.pi) + 1.0) < 1e-14


@given(st.floats(-3, 3), st.floats(0.1, 4), st.sampled_from([16, 32, 64]))
def test_circle_winding_number(center, radius, n):
    c = build_circle(center, radius, n, 1)
    w = c.integrate(1.0 / (2j * math.pi * (c.nodes - center)))
    assert abs(w - 1.0) < 1e-10


def test_loop_is_a_circle():
    lp = build_loop(1.0, 0.25, 64, -1)
    assert lp.shape == "loop"
    assert abs(lp.integrate(1.0 / (lp.nodes - 1.0)) / (2j * math.pi) + 1.0) < 1e-14


def test_gauss_legendre_two_points():
    g = build_real_grid(0.0, 1.0, 1, 2)
    assert np.allclose(g.points, [0.5 - 1 / (2 * math.sqrt(3)), 0.5 + 1 / (2 * math.sqrt(3))], atol=1e-15)
    assert np.allclose(g.weights, [0.5, 0.5], atol=1e-15)
    assert abs(np.sum(g.weights * g.points ** 2) - 1 / 3) < 1e-15


def test_exponential_on_composite_grid():
    g = build_real_grid(0.0, 30.0, 30, 8)
    assert abs(np.sum(g.weights * np.exp(-g.points)) - (1 - math.exp(-30))) < 1e-13


@given(st.floats(-20, 5), st.floats(0.5, 30), st.lists(st.floats(-25, 40), max_size=4))
def test_graded_grid_invariants(lo, width, breaks):
    hi = lo + width
    g = build_graded_grid(lo, hi, breaks, n_per_unit=6, fine=1e-3)
    assert np.all(np.diff(g.points) > 0)
    assert np.all(g.weights > 0)
    assert abs(np.sum(g.weights) - width) < 1e-12 * width
    assert lo < g.points[0] and g.points[-1] < hi


def test_oy_line_truncation():
    sym = make_symbol("OY", dict(N=1, a=[0.0], tau=1.0))
    line = build_vertical_line(sym, tol=1e-12)
    # the Gaussian alone would need sqrt(2 ln 1e12) ~ 7.4; 1/Gamma adds growth e^{pi|y|/2}
    assert math.sqrt(2 * math.log(1e12)) < line.halfheight < 12.0
    assert line.tail_bound <= 1e-12
    assert np.allclose(np.sort(line.nodes.imag), np.sort(-line.nodes.imag))
    assert np.all(np.abs(line.nodes.real - line.abscissa) < 1e-15)


def test_loggamma_line_truncation_follows_stirling_rate():
    sym = make_symbol("LogGamma", dict(n=2, N=1, alpha=[1.0], a=[0.0]))
    line = build_vertical_line(sym, tol=1e-12)
    estimate = 2 * math.log(1e12) / math.pi
    assert 0.75 * estimate < line.halfheight < 1.25 * estimate
    assert line.tail_bound <= 1e-12


def test_line_outside_strip_is_rejected():
    sym = make_symbol("LogGamma", dict(n=2, N=1, alpha=[1.0], a=[0.0]))
    with pytest.raises(ValidationError):
        build_vertical_line(sym, c=1.5)


def test_slow_decay_raises_truncation_error():
    sym = make_symbol("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]))
    with pytest.raises(TruncationError):
        line_halfheight(sym, sym.line_abscissa, 1e-12)
    bent = build_bent_line(sym)
    assert bent.shape == "bent"


def test_line_integrates_gaussian():
    # (2 pi i)^{-1} int e^{v^2/2} dv over Re v = c equals 1/sqrt(2 pi)
    sym = make_symbol("GUEext", dict(N=1, a=[0.0], tau=1.0))
    line = build_vertical_line(sym, c=0.7, tol=1e-14)
    val = line.integrate(np.exp(line.nodes ** 2 / 2)) / (2j * math.pi)
    assert abs(val - 1 / math.sqrt(2 * math.pi)) < 1e-13


def test_refined_doubles_nodes():
    sym = make_symbol("OY", dict(N=1, a=[0.0], tau=1.0))
    line = build_vertical_line(sym)
    assert len(line.refined()) >= 2 * len(line) - 2
    c = build_circle(0.0, 0.5, 40)
    assert len(c.refined()) == 80


@pytest.mark.parametrize("kind,params,pts", [
    ("OY", dict(N=2, a=[0.0, 0.2], tau=1.0), [(-1.0, 0.5), (0.3, 2.0), (1.5, -0.7)]),
    ("GUEext", dict(N=2, a=[0.0, 0.5], tau=1.0), [(-1.0, 0.5), (0.3, 2.0)]),
    ("LogGamma", dict(n=3, N=2, alpha=1.0, a=[0.0, 0.3]), [(-1.0, 0.5), (0.3, 2.0)]),
])
def test_contour_independence(kind, params, pts):
    sym = make_symbol(kind, params)
    base = make_context(sym, x_max=3)
    right = sym.strip[1]
    edge = sym.sigma_center + sym.sigma_radius
    c_alt = 0.5 * (sym.line_abscissa + min(right, edge + 1.5))
    moved = make_context(sym, x_max=3, abscissa=c_alt)
    for x, xp in pts:
        v0, v1 = eval_L(base, x, xp), eval_L(moved, x, xp)
        assert abs(v0 - v1) < 1e-8 * max(abs(v0), 1e-3)


def test_node_doubling_self_consistency():
    sym = make_symbol("OY", dict(N=2, a=[0.0, 0.2], tau=1.0))
    ctx = make_context(sym, x_max=3)
    x = np.array([-2.0, 0.0, 1.5])
    d = np.abs(eval_L(ctx, x, x) - eval_L(ctx.refined(), x, x))
    assert np.max(d) < 10 * max(ctx.line_contour.tail_bound, 1e-13)


def test_log_modulus_helper_consistency():
    sym = make_symbol("OY", dict(N=1, a=[0.0], tau=1.0))
    assert abs(log_symbol(sym, 0.5 + 1j).real - log_symbol(sym, 0.5 - 1j).real) < 1e-14
