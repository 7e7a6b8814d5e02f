"""Average multiplicative statistics mu_N[sigma] = E prod_k (1 - sigma(x_k)).

Four representations are available:

* ``det_matrix_form``: the N x N determinant of moments of 1 - sigma against
  the biorthogonal functions, with the x integral done in closed form where
  sigma has a known Laplace transform.
* ``det_L``: Nystrom discretisation of det(1 - sigma L_N) on the real line.
* ``det_H``: Nystrom discretisation of det(1 - H^sigma) on (0, inf).
* ``det_K``: det(1 + K_{N,t}) on the closed contour Sigma (Fermi factor only).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (BiorthoError, DecayError, GridError, NearSingularError, NoRepresentationError,
                     NumericalError, SingularNormalization, TruncationError, ValidationError)
from .kernels import (TWO_PI_I, KernelContext, H_matrix, K_matrix, L_matrix, eval_L_hat, make_context,
                      phi_matrix, psi_matrix, symbol_derivatives, widened)
from .models import ModelSymbol, RepresentationFlags, canonical_kind, log_symbol, make_symbol, representation_flags
from .quadrature import build_graded_grid, build_vertical_line
from .sigma import SigmaSpec

__all__ = [
    "SigmaSpec", "FredholmReport", "det_matrix_form", "det_L", "det_L_hat", "det_H", "det_K", "mu_sigma",
    "laplace_transform", "gap_probability", "deformed_one_point", "deformed_density", "log_derivative",
    "zero_temperature_sweep", "x_support",
]

REPRESENTATIONS = ("matrix", "L", "H", "K")
SCAN_LIMIT = 80.0
SCAN_REL = 1e-15
GRID_PER_UNIT = 6.0
PANEL_NODES = 16
MU_FLOOR = 1e-10


@dataclass
class FredholmReport:
    """Values of mu_N[sigma] from each applicable representation."""

    matrix_value: float | None = None
    L_value: float | None = None
    H_value: float | None = None
    K_value: float | None = None
    flags: RepresentationFlags | None = None
    refinement_error: dict = field(default_factory=dict)
    consensus: float = 0.0
    excluded: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)

    def values(self) -> dict:
        out = {}
        for name in REPRESENTATIONS:
            v = getattr(self, f"{name}_value")
            if v is not None:
                out[name] = v
        return out

    @property
    def value(self) -> float:
        """Preferred value: the first available of matrix, L, H, K."""
        vals = self.values()
        if not vals:
            raise NoRepresentationError("no representation produced a value")
        return next(iter(vals.values()))

    def as_record(self) -> dict:
        rec = {f"{k}_value": v for k, v in self.values().items()}
        rec["refinement_error"] = dict(self.refinement_error)
        rec["consensus"] = self.consensus
        rec["flags"] = self.flags.as_dict() if self.flags is not None else {}
        rec["excluded"] = dict(self.excluded)
        rec.update(self.sigma)
        return rec


def _consensus(values: dict) -> float:
    worst = 0.0
    for (_, x), (_, y) in itertools.combinations(values.items(), 2):
        scale = max(abs(x), abs(y))
        if scale > 0:
            worst = max(worst, abs(x - y) / scale)
    return worst


def _as_context(ctx_or_sym, **kw) -> KernelContext:
    if isinstance(ctx_or_sym, KernelContext):
        return ctx_or_sym
    if isinstance(ctx_or_sym, ModelSymbol):
        return make_context(ctx_or_sym, **kw)
    raise ValidationError("expected a KernelContext or ModelSymbol")


def _real_value(z: complex, what: str, rel: float = 1e-6) -> float:
    if abs(z.imag) > rel * max(abs(z), 1e-300) and abs(z.imag) > 1e-12:
        raise NumericalError(f"{what}: determinant has imaginary part {z.imag:.3g} (value {z.real:.6g})")
    return float(z.real)


# ---------------------------------------------------------------- support of x

def _domain_bounds(sym: ModelSymbol) -> tuple[float, float]:
    if sym.kind == "LUEext":
        return 0.0, math.inf
    if sym.kind == "TruncUnitaryProduct":
        return -math.inf, 0.0
    return -math.inf, math.inf


def _active_bounds(sym: ModelSymbol, sigma: SigmaSpec) -> tuple[float, float]:
    lo, hi = _domain_bounds(sym)
    if sigma.kind == "indicator":
        lo = max(lo, sigma.threshold)
    return lo, hi


def x_support(ctx: KernelContext, sigma: SigmaSpec | None, rel: float = SCAN_REL,
              limit: float = SCAN_LIMIT) -> tuple[float, float]:
    """Interval outside of which |sigma(x) L(x, x)| is negligible.

    The cut is ``rel`` times the larger of the peak of |sigma L| and the peak
    of |L| itself, so a sigma that only reaches the kernel's noise floor
    counts as vanishing.  ``sigma=None`` gives the support of L(x, x).
    Raises GridError when the product has not decayed at the scan window or
    vanishes altogether.
    """
    sym = ctx.sym
    d_lo, d_hi = _domain_bounds(sym)
    lo, hi = (d_lo, d_hi) if sigma is None else _active_bounds(sym, sigma)
    a, b = max(d_lo, -limit), min(d_hi, limit)
    if not (a < b and max(lo, a) < min(hi, b)):
        raise GridError("empty x-range for the Nystrom grid")
    sctx = widened(ctx, max(abs(a), abs(b)))
    xs = np.linspace(a, b, int(math.ceil((b - a) * 4)) + 1)
    if ctx.alt_contour is not None and ctx.line_contour is None:
        xs = xs[xs >= ctx.alt_from]
        if len(xs) < 2:
            raise GridError("no admissible x-range for the available contour")
    try:
        dL = np.abs(np.einsum("ii->i", L_matrix(sctx, xs, xs, check=False)))
    except TruncationError as exc:
        raise GridError(f"kernel unavailable on the x-range: {exc}") from exc
    d = dL if sigma is None else dL * np.abs(sigma(xs))
    d = np.where((xs >= lo) & (xs <= hi), d, 0.0)
    peak = d.max()
    cut = rel * max(peak, dL.max())
    if not peak > cut:
        raise GridError("sigma * L vanishes on the scan window")
    big = np.nonzero(d > cut)[0]
    i0, i1 = big[0], big[-1]
    if (i0 == 0 and math.isinf(lo)) or (i1 == len(xs) - 1 and math.isinf(hi)):
        raise GridError(f"sigma * L(x, x) has not decayed within |x| <= {limit:g}")
    x_lo = max(float(xs[max(i0 - 1, 0)]), lo)
    x_hi = min(float(xs[min(i1 + 1, len(xs) - 1)]), hi)
    return x_lo, x_hi


def _grid(ctx: KernelContext, sigma: SigmaSpec, per_unit: float, support=None):
    x_lo, x_hi = x_support(ctx, sigma) if support is None else support
    g = build_graded_grid(x_lo, x_hi, sigma.breakpoints + _domain_breaks(ctx.sym, x_lo, x_hi),
                          n_per_unit=per_unit, nodes_per_panel=PANEL_NODES)
    return g.points, g.weights, (x_lo, x_hi)


def _domain_breaks(sym: ModelSymbol, lo: float, hi: float) -> tuple:
    # kernels with two v-contours switch at x = 0
    return (0.0,) if lo < 0.0 < hi else ()


def _h_weight(sym: ModelSymbol, x: np.ndarray) -> np.ndarray:
    eps = 0.5 * (sym.line_abscissa - sym.a_max) if sym.line_abscissa > sym.a_max else 0.1
    eps = min(eps, 0.5)
    return np.where(x >= 0, (sym.a_max + eps) * x, (sym.a_min - eps) * x)


# ---------------------------------------------------------------- matrix form

def _sigma_transform(sym: ModelSymbol, sigma: SigmaSpec):
    """F(w) = int_D sigma(x) e^{-w x} dx on the symbol's domain D and the admissible
    range of Re w, or None when no closed form is available."""
    lo, hi = _domain_bounds(sym)
    if sigma.kind == "zero":
        return (lambda w: np.zeros_like(w, dtype=complex)), (-math.inf, math.inf), ()
    if sigma.kind == "fermi" and math.isinf(lo) and math.isinf(hi):
        return sigma.mellin, (0.0, 1.0), tuple(float(k) for k in range(-2, 4))
    if sigma.kind == "indicator":
        x0 = sigma.threshold
        if math.isinf(hi):
            x1 = max(x0, lo)
            return (lambda w: np.exp(-w * x1) / w), (0.0, math.inf), (0.0,)
        if x0 >= hi:
            return (lambda w: np.zeros_like(w, dtype=complex)), (-math.inf, math.inf), ()

        def F(w):
            w = np.asarray(w, dtype=complex)
            small = np.abs(w) < 1e-8
            ws = np.where(small, 1.0, w)
            return np.where(small, hi - x0 - 0.5 * w * (hi * hi - x0 * x0),
                            (np.exp(-ws * x0) - np.exp(-ws * hi)) / ws)
        return F, (-math.inf, math.inf), ()
    return None


def _moment_contour(ctx: KernelContext, sigma: SigmaSpec, re_range, tol: float):
    """v-contour on which every F(v - a_m) is evaluated inside its half-plane."""
    sym = ctx.sym
    if sym.line_kind == "loop":
        line = ctx.line_contour
        re = np.subtract.outer(line.nodes.real, np.asarray(sym.a))
        if np.all(re > re_range[0]) and np.all(re < re_range[1]):
            return line
        return None
    lo_s, hi_s = sym.strip
    lo = max(lo_s, sym.a_max + re_range[0], sym.sigma_center + sym.sigma_radius)
    hi = min(hi_s, sym.a_min + re_range[1])
    candidates = [sym.line_abscissa]
    if "right_abscissa" in sym.extra:
        candidates.append(sym.extra["right_abscissa"])
    if lo < hi and math.isfinite(hi) and math.isfinite(lo):
        candidates.append(0.5 * (lo + hi))
    c = next((c for c in candidates if lo < c < hi), None)
    if c is None:
        return None
    shift = abs(sigma.t) if sigma.kind == "fermi" else abs(sigma.threshold) if sigma.kind == "indicator" else 0.0
    rate = math.pi if sigma.kind == "fermi" else 0.0
    power = 2.0 if sigma.kind == "indicator" else 1.0
    # the nearest singularities are the zeros a_m and the poles of F(v - a_m)
    near = min(c - sym.a_max - re_range[0], (sym.a_min + re_range[1] - c) if math.isfinite(re_range[1]) else 1.0)
    return build_vertical_line(sym, c, tol=tol, n_per_unit=24 + 0.8 * shift, extra_rate=rate,
                               extra_power=power, near=max(min(near, 0.5), 1e-3))


def _cauchy_derivatives(F, s: np.ndarray, order: int, radius: np.ndarray, n: int = 64) -> np.ndarray:
    """(-d/ds)^j F(s) for j = 0..order by the trapezoid rule on circles around each s."""
    theta = 2 * math.pi * (np.arange(n) + 0.5) / n
    e = np.exp(1j * theta)
    vals = F(s[:, None] + radius[:, None] * e[None, :])
    out = np.empty((len(s), order + 1), dtype=complex)
    for j in range(order + 1):
        out[:, j] = (-1) ** j * math.factorial(j) * np.mean(vals * e[None, :] ** (-j), axis=1) / radius ** j
    return out


def _confluent_normalisation(ctx: KernelContext) -> np.ndarray:
    """D_{mk} = int x^{m-1} phi_k(e^x) dx as Cauchy integrals on Sigma."""
    sym = ctx.sym
    a, N = sym.a[0], sym.N
    u, wu, lu = ctx.sigma_contour.nodes, ctx.sigma_contour.weights, ctx.logW_u
    D = np.zeros((N, N), dtype=complex)
    for m in range(1, N + 1):
        for k in range(1, m + 1):
            p = N - k + 1 + m
            D[m - 1, k - 1] = math.factorial(m - 1) * np.sum(wu * np.exp(lu - p * np.log(u - a))) / TWO_PI_I
    return D


def _matrix_closed(ctx: KernelContext, sigma: SigmaSpec, tol: float) -> float | None:
    sym = ctx.sym
    tr = _sigma_transform(sym, sigma)
    if tr is None:
        return None
    F, re_range, poles = tr
    try:
        line = _moment_contour(ctx, sigma, re_range, tol)
    except TruncationError:
        return None
    if line is None:
        return None
    v, wv = line.nodes, line.weights
    lv = log_symbol(sym, v)
    a = np.asarray(sym.a)
    N = sym.N
    if sym.is_distinct:
        dW = symbol_derivatives(ctx)
        G = np.exp(lv[:, None]) / (v[:, None] - a[None, :]) / dW[None, :]
        Fm = F(v[:, None] - a[None, :])
        S = (Fm * wv[:, None]).T @ G / TWO_PI_I
        return _real_value(np.linalg.det(np.eye(N) - S), "matrix form")
    a0 = a[0]
    s = v - a0
    if poles:
        dist = np.min(np.abs(s[:, None] - np.asarray(poles)[None, :]), axis=1)
    else:
        dist = np.full(len(s), 1.0)
    deriv = _cauchy_derivatives(F, s, N - 1, 0.5 * np.minimum(dist, 1.0))
    powers = np.array([N - k + 1 for k in range(1, N + 1)])
    G = np.exp(lv[:, None] - powers[None, :] * np.log(s)[:, None])
    S = (deriv * wv[:, None]).T @ G / TWO_PI_I
    D = _confluent_normalisation(ctx)
    dD = np.linalg.det(D)
    if abs(dD) < 1e-12:
        raise SingularNormalization(f"confluent normalisation determinant {abs(dD):.3g} below 1e-12")
    return _real_value(np.linalg.det(D - S) / dD, "matrix form")


def _matrix_grid(ctx: KernelContext, sigma: SigmaSpec, per_unit: float) -> float:
    sym = ctx.sym
    x, w, (lo, hi) = _grid(ctx, sigma, per_unit)
    gctx = widened(ctx, max(abs(lo), abs(hi)))
    sw = sigma(x) * w
    N = sym.N
    if sym.is_distinct:
        g = psi_matrix(gctx, x)
        f = np.exp(np.outer(x, sym.a))
        return float(np.linalg.det(np.eye(N) - (f * sw[:, None]).T @ g))
    g = phi_matrix(gctx, x)
    f = x[:, None] ** np.arange(N)[None, :]
    D = _confluent_normalisation(gctx).real
    dD = np.linalg.det(D)
    if abs(dD) < 1e-12:
        raise SingularNormalization(f"confluent normalisation determinant {abs(dD):.3g} below 1e-12")
    return float(np.linalg.det(D - (f * sw[:, None]).T @ g) / dD)


def det_matrix_form(ctx, sigma: SigmaSpec, method: str = "auto", refine: bool = False):
    """mu_N[sigma] as det( int (1 - sigma) f_m g_k dx ) over the biorthogonal system.

    Distinct zeros use f_m = e^{a_m x}, g_k = psi_k(e^x); confluent zeros use
    f_m = x^{m-1}, g_k = phi_k(e^x) and divide by the determinant of the
    unweighted moments.  ``method`` is "closed" (x integral via the Laplace
    transform of sigma), "grid" (x quadrature) or "auto".  With ``refine``
    a (value, error) pair is returned.
    """
    ctx = _as_context(ctx)
    sym = ctx.sym
    if sigma.kind == "zero":
        return (1.0, 0.0) if refine else 1.0
    if not (sym.is_distinct or sym.is_confluent):
        raise NoRepresentationError("matrix form needs distinct or fully confluent zeros")
    val = None
    if method in ("auto", "closed"):
        val = _matrix_closed(ctx, sigma, ctx.tolerance)
        if val is None and method == "closed":
            raise ValidationError("no closed-form transform for this sigma on this symbol")
        if val is not None and refine:
            fine = _matrix_closed(ctx.refined(), sigma, 0.01 * ctx.tolerance)
            return fine, abs(fine - val)
    if val is None:
        if method not in ("auto", "grid"):
            raise ValidationError(f"unknown method {method!r}")
        val = _matrix_grid(ctx, sigma, GRID_PER_UNIT)
        if refine:
            fine = _matrix_grid(ctx.refined(), sigma, 2 * GRID_PER_UNIT)
            return fine, abs(fine - val)
    return (val, 0.0) if refine else val


# ---------------------------------------------------------------- Nystrom forms

def _nystrom_det(K: np.ndarray) -> complex:
    lu, piv = scipy.linalg.lu_factor(np.eye(len(K)) - K, check_finite=True)
    sign = np.prod(np.where(piv != np.arange(len(piv)), -1.0, 1.0))
    return complex(sign * np.prod(np.diag(lu)))


def _det_L_once(ctx: KernelContext, sigma: SigmaSpec, per_unit: float, support) -> float:
    x, w, (lo, hi) = _grid(ctx, sigma, per_unit, support)
    gctx = widened(ctx, max(abs(lo), abs(hi)))
    L = L_matrix(gctx, x, x)
    lh = _h_weight(ctx.sym, x)
    sq = np.sqrt(w)
    M = (sq * sigma(x))[:, None] * np.exp(lh[:, None] - lh[None, :]) * L * sq[None, :]
    return _real_value(_nystrom_det(M), "det_L")


def det_L(ctx, sigma: SigmaSpec, refine: bool = False, per_unit: float = GRID_PER_UNIT):
    """det(1 - sigma L_N) by Nystrom discretisation on a Gauss-Legendre grid.

    The grid covers the range where sigma(x) L(x, x) is non-negligible; the
    matrix is conjugated by h(x) = e^{(a_max + eps) x} (x >= 0),
    e^{(a_min - eps) x} (x < 0), which leaves the determinant unchanged.
    """
    ctx = _as_context(ctx)
    if sigma.kind == "zero":
        return (1.0, 0.0) if refine else 1.0
    try:
        support = x_support(ctx, sigma)
    except GridError as exc:
        if "vanishes" in str(exc):
            return (1.0, 0.0) if refine else 1.0
        raise
    val = _det_L_once(ctx, sigma, per_unit, support)
    if not refine:
        return val
    fine = _det_L_once(widened(ctx, max(map(abs, support))).refined(), sigma, 2 * per_unit, support)
    return fine, abs(fine - val)


def det_L_hat(ctx, s0: float, per_unit: float = GRID_PER_UNIT, refine: bool = False):
    """P(all points <= s0) for exponential variables: det(1 - L_hat) on (s0, inf).

    The Nystrom nodes are s_i = e^{x_i} for a Gauss-Legendre grid in x, with
    weights w_i s_i, so the rule is graded towards the origin.
    """
    ctx = _as_context(ctx)
    if not s0 > 0:
        raise ValidationError("exponential variables need s0 > 0")
    sigma = SigmaSpec.indicator(math.log(s0))
    try:
        support = x_support(ctx, sigma)
    except GridError as exc:
        if "vanishes" in str(exc):
            return (1.0, 0.0) if refine else 1.0
        raise
    gctx = widened(ctx, max(map(abs, support)))

    def once(c, pu):
        x, w, _ = _grid(c, sigma, pu, support)
        s, ws = np.exp(x), w * np.exp(x)
        sq = np.sqrt(ws)
        K = sq[:, None] * eval_L_hat(c, s, s) * sq[None, :]
        return _real_value(_nystrom_det(K), "det_L_hat")

    val = once(gctx, per_unit)
    if not refine:
        return val
    fine = once(gctx.refined(), 2 * per_unit)
    return fine, abs(fine - val)


def _y_support(ctx: KernelContext, sigma: SigmaSpec, rel: float = SCAN_REL, limit: float = 120.0) -> float:
    y = np.linspace(0.0, limit, int(limit * 2) + 1)
    y_head = y[y <= 40.0]
    sctx = widened(ctx, 40.0)
    d = np.abs(np.diag(H_matrix(sctx, sigma, y_head, y_head, check=False)))
    peak = d.max()
    if not peak > 0:
        return 0.0
    if d[-1] > rel * peak:
        sctx = widened(ctx, limit)
        d = np.abs(np.diag(H_matrix(sctx, sigma, y, y, check=False)))
        peak = d.max()
    else:
        y = y_head
    big = np.nonzero(d > rel * peak)[0]
    if big[-1] == len(y) - 1:
        raise GridError(f"H(y, y) has not decayed within y <= {limit:g}")
    return float(y[big[-1] + 1])


def _det_H_once(ctx: KernelContext, sigma: SigmaSpec, Y: float, per_unit: float) -> float:
    g = build_graded_grid(0.0, Y, (), n_per_unit=per_unit, nodes_per_panel=PANEL_NODES)
    y, w = g.points, g.weights
    gctx = widened(ctx, Y)
    H = H_matrix(gctx, sigma, y, y)
    sym = ctx.sym
    eps = 0.5 * (sym.line_abscissa - sym.a_max)
    e = (sym.a_max + eps) * y
    sq = np.sqrt(w)
    M = sq[:, None] * np.exp(-(e[:, None] - e[None, :])) * H * sq[None, :]
    return _real_value(_nystrom_det(M), "det_H")


def det_H(ctx, sigma: SigmaSpec, refine: bool = False, per_unit: float = GRID_PER_UNIT):
    """det(1 - H~^sigma) on L^2(0, inf) by Nystrom discretisation.

    H~(y, y') = e^{-(a_max + eps)(y - y')} H^sigma(y, y') with
    eps = (c - a_max) / 2 for the line abscissa c.
    """
    ctx = _as_context(ctx)
    sym = ctx.sym
    if sigma.kind == "zero":
        return (1.0, 0.0) if refine else 1.0
    flags = representation_flags(sym, sigma)
    if not flags.H_ok:
        raise DecayError(flags.reason_if_not.get("H", "H representation not applicable"))
    Y = _y_support(ctx, sigma)
    if Y == 0.0:
        return (1.0, 0.0) if refine else 1.0
    val = _det_H_once(ctx, sigma, Y, per_unit)
    if not refine:
        return val
    fine = _det_H_once(widened(ctx, Y).refined(), sigma, Y, 2 * per_unit)
    return fine, abs(fine - val)


def det_K(ctx, t: float, refine: bool = False):
    """det(1 + K_{N,t}) on Sigma with the trapezoid weights folded into K."""
    ctx = _as_context(ctx)
    flags = representation_flags(ctx.sym, SigmaSpec.fermi(t))
    if not flags.K_ok:
        raise DecayError(flags.reason_if_not.get("K", "K representation not applicable"))
    val = _real_value(_nystrom_det(-K_matrix(ctx, t, weighted=True)), "det_K")
    if not refine:
        return val
    fine = _real_value(_nystrom_det(-K_matrix(ctx.refined(), t, weighted=True)), "det_K")
    return fine, abs(fine - val)


# ---------------------------------------------------------------- dispatch

def mu_sigma(ctx, sigma: SigmaSpec, representations=REPRESENTATIONS, refine: bool = True) -> FredholmReport:
    """mu_N[sigma] by every applicable representation, each with one refinement."""
    ctx = _as_context(ctx)
    sym = ctx.sym
    flags = representation_flags(sym, sigma)
    report = FredholmReport(flags=flags, sigma=sigma.describe())
    for name in representations:
        if name not in REPRESENTATIONS:
            raise ValidationError(f"unknown representation {name!r}")
        ok = getattr(flags, f"{name}_ok")
        if not ok:
            report.excluded[name] = flags.reason_if_not.get(name, "not applicable")
            continue
        try:
            if name == "matrix":
                val, err = det_matrix_form(ctx, sigma, refine=True) if refine else (det_matrix_form(ctx, sigma), 0.0)
            elif name == "L":
                val, err = det_L(ctx, sigma, refine=refine) if refine else (det_L(ctx, sigma), 0.0)
            elif name == "H":
                val, err = det_H(ctx, sigma, refine=refine) if refine else (det_H(ctx, sigma), 0.0)
            else:
                val, err = det_K(ctx, sigma.t, refine=refine) if refine else (det_K(ctx, sigma.t), 0.0)
        except BiorthoError as exc:
            report.excluded[name] = f"{type(exc).__name__}: {exc}"
            continue
        setattr(report, f"{name}_value", val)
        report.refinement_error[name] = err
    if not report.values():
        raise NoRepresentationError("no representation could be evaluated: "
                                    + "; ".join(f"{k}: {v}" for k, v in report.excluded.items()))
    report.consensus = _consensus(report.values())
    return report


POLYMERS = ("LogGamma", "OY", "Mixed")
MATRIX_MODELS = ("GUEext", "LUEext", "GLUEext", "GinibreProduct")


def laplace_transform(model: str, params: dict, t: float, representations=REPRESENTATIONS,
                      refine: bool = True, **numeric) -> FredholmReport:
    """E[exp(-e^t Z)] for the LogGamma, O'Connell-Yor or mixed polymer partition function."""
    kind = canonical_kind(model)
    if kind not in POLYMERS:
        raise ValidationError(f"laplace_transform needs one of {POLYMERS}, got {kind}")
    sym = make_symbol(kind, params)
    ctx = make_context(sym, **numeric)
    return mu_sigma(ctx, SigmaSpec.fermi(t), representations, refine)


def gap_probability(model: str, params: dict, s: float, **numeric) -> float:
    """P(max point <= s) for a matrix-model symbol.

    GUE+/LUE+/GLUE+ use the matrix form with sigma = 1_{x > s}, falling back
    to det_L; Ginibre products use det(1 - L_hat) on (s, inf) in the squared
    singular value variable.
    """
    kind = canonical_kind(model)
    if kind not in MATRIX_MODELS:
        raise ValidationError(f"gap_probability needs one of {MATRIX_MODELS}, got {kind}")
    sym = make_symbol(kind, params)
    ctx = make_context(sym, **numeric)
    if kind == "GinibreProduct":
        if not s > 0:
            raise ValidationError("Ginibre gap probability needs s > 0")
        return det_L_hat(ctx, float(s))
    if kind == "LUEext" and s < 0:
        raise ValidationError("LUE+ eigenvalues are positive: s >= 0 required")
    sigma = SigmaSpec.indicator(float(s))
    try:
        return det_matrix_form(ctx, sigma)
    except (NumericalError, NoRepresentationError):
        return det_L(ctx, sigma)


# ---------------------------------------------------------------- deformed measure

@dataclass
class _Resolvent:
    ctx: KernelContext
    sigma: SigmaSpec
    x: np.ndarray
    w: np.ndarray
    lu: tuple
    det: float

    def diag_nodes(self) -> np.ndarray:
        """kappa~ at the grid nodes."""
        L = L_matrix(self.ctx, self.x, self.x)
        Y = scipy.linalg.lu_solve(self.lu, L)
        return np.diag(Y).copy()

    def __call__(self, xq) -> np.ndarray:
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        sw = self.sigma(self.x) * self.w
        Lxz = L_matrix(self.ctx, xq, self.x)
        Lzx = L_matrix(self.ctx, self.x, xq)
        Lxx = np.array([L_matrix(self.ctx, [q], [q])[0, 0] for q in xq])
        Y = scipy.linalg.lu_solve(self.lu, Lzx)
        return Lxx + np.sum(Lxz * sw[None, :] * Y.T, axis=1)


def _resolvent(ctx: KernelContext, sigma_t: SigmaSpec, per_unit: float = 2 * GRID_PER_UNIT,
               extra_points=()) -> _Resolvent:
    try:
        lo, hi = x_support(ctx, sigma_t)
    except GridError as exc:
        if "vanishes" not in str(exc):
            raise
        lo, hi = x_support(ctx, None)
    for p in extra_points:
        lo, hi = min(lo, p), max(hi, p)
    x, w, _ = _grid(ctx, sigma_t, per_unit, (lo, hi))
    gctx = widened(ctx, max(abs(lo), abs(hi)))
    L = L_matrix(gctx, x, x)
    A = np.eye(len(x)) - L * (sigma_t(x) * w)[None, :]
    lu = scipy.linalg.lu_factor(A)
    sign = np.prod(np.where(lu[1] != np.arange(len(x)), -1.0, 1.0))
    det = float(sign * np.prod(np.diag(lu[0])))
    if abs(det) < MU_FLOOR:
        raise NearSingularError(f"mu_N[sigma_t] = {det:.3g} is below {MU_FLOOR:g}")
    return _Resolvent(gctx, sigma_t, x, w, lu, det)


def deformed_one_point(ctx, sigma: SigmaSpec, t: float, x):
    """kappa~_{N,t}(x) = M_t(x, x), the resolvent kernel of sigma_t L on its diagonal.

    sigma_t(x) = sigma(x + t).  Without deformation (sigma = 0) this is L(x, x).
    """
    ctx = _as_context(ctx)
    st = sigma.shifted(t)
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    if st.kind == "zero":
        qctx = widened(ctx, float(np.max(np.abs(xq))))
        val = np.einsum("ii->i", L_matrix(qctx, xq, xq))
    else:
        res = _resolvent(ctx, st)
        qctx = widened(res.ctx, float(np.max(np.abs(xq))))
        res.ctx = qctx
        val = res(xq)
    return float(val[0]) if np.isscalar(x) else val


def deformed_density(ctx, sigma: SigmaSpec, t: float, x):
    """kappa_{N,t}(x) = (1 - sigma_t(x)) kappa~_{N,t}(x)."""
    k = deformed_one_point(ctx, sigma, t, x)
    return (1.0 - sigma.shifted(t)(x)) * k


def log_derivative(ctx, sigma: SigmaSpec, t: float) -> float:
    """d/dt log mu_N[sigma_t] with sigma_t(x) = sigma(x + t).

    Equals -int sigma'(x + t) kappa~_{N,t}(x) dx; for the Fermi factor this is
    -int sigma_t kappa_{N,t} dx and for sigma = 1_{x > c} it is
    -kappa~_{N,t}(c - t).
    """
    ctx = _as_context(ctx)
    st = sigma.shifted(t)
    if st.kind == "zero":
        return 0.0
    if st.kind == "indicator":
        res = _resolvent(ctx, st)
        return -float(res([st.threshold])[0])
    if st.kind == "custom" and st.deriv is None:
        raise ValidationError("custom sigma needs a derivative for the log-derivative identity")
    res = _resolvent(ctx, st)
    k = res.diag_nodes()
    return -float(np.sum(res.w * st.derivative(res.x) * k))


# ---------------------------------------------------------------- zero temperature

def _zero_temp_case(kind: str, params: dict, T: float):
    p = dict(params)
    if kind == "LogGamma":
        N = int(p["N"])
        n = int(p.get("n", N) or N)
        b = p.get("b", [0.0] * N)
        b = list(b) if np.ndim(b) else [float(b)] * N
        poly = dict(N=N, n=n, alpha=[T] * n, a=[T * x for x in b])
        limit = ("LUEext", dict(N=N, b=b, nu=n - N))
    elif kind == "OY":
        N = int(p["N"])
        a = p.get("a", [0.0] * N)
        a = list(a) if np.ndim(a) else [float(a)] * N
        tau = float(p.get("tau", 1.0))
        poly = dict(N=N, a=[T * x for x in a], tau=tau / T ** 2)
        limit = ("GUEext", dict(N=N, a=a, tau=tau))
    elif kind == "Mixed":
        N = int(p["N"])
        b = p.get("b", [0.0] * N)
        b = list(b) if np.ndim(b) else [float(b)] * N
        tau = float(p.get("tau", 1.0))
        poly = dict(N=N, n=N, alpha=[T - T * x for x in b], a=[0.0] * N, tau=tau / T ** 2)
        limit = ("GLUEext", dict(N=N, b=b, tau=tau))
    else:
        raise ValidationError(f"zero-temperature sweep needs one of {POLYMERS}")
    return poly, limit


def zero_temperature_sweep(model: str, params: dict, t: float, T_list) -> list[dict]:
    """Polymer Laplace transforms at rescaled parameters against the matrix-model limit.

    For each T the polymer is evaluated at argument t / T; the limit is
    P(max <= -t) in the corresponding matrix model.
    """
    kind = canonical_kind(model)
    T_list = [float(T) for T in T_list]
    if not T_list:
        raise ValidationError("T list is empty")
    if any(T <= 0 for T in T_list) or any(b >= a for a, b in zip(T_list, T_list[1:])):
        raise ValidationError("T values must be positive and strictly decreasing")
    _, (lkind, lparams) = _zero_temp_case(kind, params, T_list[0])
    limit = gap_probability(lkind, lparams, -t)
    rows = []
    for T in T_list:
        poly, _ = _zero_temp_case(kind, params, T)
        rep = laplace_transform(kind, poly, t / T, representations=("matrix", "K", "L"), refine=False)
        val = rep.value
        rows.append({"T": T, "polymer_value": val, "limit_value": limit, "difference": abs(val - limit)})
    return rows
