from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from biortho.errors import ValidationError
from biortho.models import (GAUSSIAN_DECAY, KINDS, canonical_kind, log_symbol, make_symbol,
                            representation_flags, symbol_derivative_at_zero, symbol_value)
from biortho.quadrature import build_circle
from biortho.sigma import SigmaSpec

EXAMPLES = {
    "LogGamma": dict(n=3, N=2, alpha=[1.0, 1.3, 1.5], a=[0.0, 0.3]),
    "OY": dict(N=2, a=[0.0, 0.2], tau=1.0),
    "Mixed": dict(N=2, alpha=[1.0, 1.2], a=[0.0, 0.1], tau=1.0),
    "GUEext": dict(N=3, a=[0.0, 0.5, 1.0], tau=1.0),
    "LUEext": dict(N=2, b=[0.0, 0.3], nu=1),
    "GLUEext": dict(N=2, b=[0.0, 0.3], tau=1.0),
    "GinibreProduct": dict(N=2, nus=[0.0, 1.0]),
    "MuttalibBorodinLUE": dict(N=2, nu=0.5, theta=2.0),
    "TruncUnitaryProduct": dict(N=2, nus=[0.0], ells=[5.0]),
}


def test_every_kind_has_an_example():
    assert set(EXAMPLES) == set(KINDS)


@pytest.mark.parametrize("kind", KINDS)
def test_winding_number_counts_zeros(kind):
    sym = make_symbol(kind, EXAMPLES[kind])
    c = build_circle(sym.sigma_center, sym.sigma_radius, 512, 1)
    h = 1e-6
    dlog = (log_symbol(sym, c.nodes + h) - log_symbol(sym, c.nodes - h)) / (2 * h)
    wind = c.integrate(dlog) / (2j * math.pi)
    assert abs(wind - sym.N) < 1e-6 * sym.N


@pytest.mark.parametrize("kind", KINDS)
def test_conjugate_symmetry(kind):
    sym = make_symbol(kind, EXAMPLES[kind])
    lo, hi = sym.strip
    x = sym.line_abscissa if sym.line_kind == "vertical" else sym.sigma_center + 0.37 * sym.sigma_radius
    z = np.array([x + 0.7j, x + 3.1j, x - 1.9j])
    w = symbol_value(sym, z)
    assert np.allclose(symbol_value(sym, z.conj()), w.conj(), rtol=1e-13, atol=0)


@pytest.mark.parametrize("kind", KINDS)
def test_simple_zeros_vanish_linearly(kind):
    sym = make_symbol(kind, EXAMPLES[kind])
    if not sym.is_distinct:
        pytest.skip("confluent zeros")
    for m in range(sym.N):
        d = symbol_derivative_at_zero(sym, m)
        assert abs(d) > 0
        for h in (1e-4, 1e-5):
            w = symbol_value(sym, sym.a[m] + h)
            # first-order Taylor error is O(h)
            assert abs(w / h - d) < 50 * h * abs(d) + 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_params_round_trip(kind):
    sym = make_symbol(kind, EXAMPLES[kind])
    again = make_symbol(kind, sym.params())
    assert again.a == sym.a and again.strip == sym.strip and again.N == sym.N


def test_zeros_inside_strip():
    for kind in KINDS:
        sym = make_symbol(kind, EXAMPLES[kind])
        lo, hi = sym.strip
        assert all(lo < ak < hi for ak in sym.a)
        assert sym.decay_exponent > 0


def test_loggamma_n_equals_N_decay_exponent():
    sym = make_symbol("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]))
    assert sym.line_abscissa == pytest.approx(0.9)
    assert sym.decay_exponent == pytest.approx(2 * 0.9 - 1)


def test_gaussian_kinds_use_sentinel():
    assert make_symbol("OY", EXAMPLES["OY"]).decay_exponent == GAUSSIAN_DECAY


@pytest.mark.parametrize("kind,params,needle", [
    ("LogGamma", dict(n=1, N=1, alpha=[0.5], a=[0.6]), "alpha_j - a_k"),
    ("LogGamma", dict(N=1, a=[0.0]), "alpha"),
    ("OY", dict(N=2, a=[0.0, 0.2], tau=-1.0), "tau"),
    ("OY", dict(N=2, a=[0.0, 0.2], tau=1.0, delta2=-3.0), "delta"),
    ("GUEext", dict(N=1, b=[0.0]), "b"),
    ("LUEext", dict(N=1, b=[1.2], nu=0), "b"),
])
def test_validation_errors_name_the_constraint(kind, params, needle):
    with pytest.raises(ValidationError, match=needle):
        make_symbol(kind, params)


def test_unknown_kind():
    with pytest.raises(ValidationError):
        canonical_kind("nonsense")
    assert canonical_kind("gue") == "GUEext"
    assert canonical_kind("GLUE+") == "GLUEext"


def test_log_symbol_examples():
    gue = make_symbol("GUEext", dict(N=1, a=[0.0], tau=1.0))
    assert abs(log_symbol(gue, 1.0) - 0.5) < 1e-15
    lue = make_symbol("LUEext", dict(N=1, b=[0.0], nu=1))
    assert abs(cmath.exp(log_symbol(lue, 0.5)) - 2.0) < 1e-14
    lg = make_symbol("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]))
    assert abs(log_symbol(lg, 0.5)) < 1e-14


def test_flags_examples():
    lg = make_symbol("LogGamma", dict(n=1, N=1, alpha=[1.0], a=[0.0]))
    f = representation_flags(lg, SigmaSpec.fermi(0.0))
    assert not f.K_ok and f.reason_if_not["K"] == "n=N decay condition fails"
    oy = make_symbol("OY", EXAMPLES["OY"])
    f = representation_flags(oy, SigmaSpec.fermi(0.0))
    assert f.matrix_ok and f.L_ok and f.H_ok and f.K_ok
    for kind in KINDS:
        f = representation_flags(make_symbol(kind, EXAMPLES[kind]), SigmaSpec.zero())
        assert f.matrix_ok and f.L_ok


def test_flag_implications():
    for kind in KINDS:
        sym = make_symbol(kind, EXAMPLES[kind])
        for sigma in (SigmaSpec.fermi(0.0), SigmaSpec.indicator(0.0), SigmaSpec.zero()):
            f = representation_flags(sym, sigma)
            if f.K_ok:
                assert sym.decay_exponent > 1 and sym.a_max - sym.a_min < 1
            if f.H_ok:
                assert sym.decay_exponent > 1
