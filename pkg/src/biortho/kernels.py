"""Kernels and special functions built from a symbol W_N.

All double contour integrals are assembled as products of node matrices,
e.g. L = A C B with A[x, v] = w_v W(v) e^{-v x}, C[v, u] = 1/(v - u) and
B[u, x'] = w_u e^{u x'} / W(u).  Symbol values are always exponentiated from
differences of log W, so large gamma products never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfluenceError, ContourCollisionError, DecayError, IntegerGapError,
                     NotConfluentError, NumericalError, SinPoleError, TruncationError,
                     ValidationError)
from .models import CONFLUENCE_TOL, ModelSymbol, log_symbol, symbol_derivative_at_zero
from .quadrature import (Contour, build_bent_line, build_circle, build_generic_line,
                         build_graded_grid, build_loop, build_vertical_line)
from .sigma import SigmaSpec, pi_over_sin
from .specfun import log_gamma

TWO_PI_I = 2j * math.pi
COLLISION_TOL = 1e-8


@dataclass(frozen=True)
class KernelContext:
    """A symbol with discretised Sigma (closed) and l (line or loop) contours.

    ``alt_contour`` replaces the line for x >= ``alt_from``: a second vertical
    line to the right of Sigma for exponential-variable symbols, or a wedge
    when the vertical line cannot be truncated (then x < alt_from is refused).
    ``left_contour``, when present, is a vertical line left of Sigma used for
    x < 0: the v = u residue is entire in u, so the kernel formulas are
    unchanged, and e^{-vx} no longer grows as x -> -inf.
    """

    sym: ModelSymbol
    sigma_contour: Contour
    line_contour: Contour | None
    tolerance: float = 1e-12
    imag_tol: float = 1e-8
    alt_contour: Contour | None = None
    alt_from: float = 0.0
    line_note: str = ""
    x_max: float = 0.0
    build: dict = field(default_factory=dict, repr=False, compare=False)
    left_contour: Contour | None = None
    logW_u: np.ndarray = field(default=None, repr=False, compare=False)
    logW_v: np.ndarray = field(default=None, repr=False, compare=False)
    logW_b: np.ndarray = field(default=None, repr=False, compare=False)
    logW_l: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "logW_u", log_symbol(self.sym, self.sigma_contour.nodes))
        if self.line_contour is not None:
            object.__setattr__(self, "logW_v", log_symbol(self.sym, self.line_contour.nodes))
        if self.alt_contour is not None:
            object.__setattr__(self, "logW_b", log_symbol(self.sym, self.alt_contour.nodes))
        if self.left_contour is not None:
            object.__setattr__(self, "logW_l", log_symbol(self.sym, self.left_contour.nodes))
        u = self.sigma_contour.nodes
        for v in (self.line_contour, self.alt_contour, self.left_contour):
            if v is not None and np.min(np.abs(v.nodes[:, None] - u[None, :])) < COLLISION_TOL:
                raise ContourCollisionError("line and sigma contour nodes closer than 1e-8")

    def refined(self) -> "KernelContext":
        """Twice the node density on every contour."""
        return KernelContext(
            self.sym, self.sigma_contour.refined(),
            None if self.line_contour is None else self.line_contour.refined(),
            self.tolerance, self.imag_tol,
            None if self.alt_contour is None else self.alt_contour.refined(),
            self.alt_from, self.line_note, self.x_max, self.build,
            None if self.left_contour is None else self.left_contour.refined(),
        )


def circle_nodes_for(sym: ModelSymbol, tol: float = 1e-15, x_max: float = 0.0, base: int = 64) -> int:
    """Trapezoid node count for the sigma circle.

    The integrands have poles at the zeros a_k inside the circle; the rule
    converges like (max|a_k - c| / r)^n, plus a term for the growth of e^{u x}.
    """
    r = sym.sigma_radius
    ratio = max(abs(ak - sym.sigma_center) for ak in sym.a) / r
    n = base
    if ratio > 1e-3:
        n = max(n, int(math.ceil(math.log(tol) / math.log(ratio))) + 8)
    n += int(math.ceil(2.0 * math.e * r * x_max))
    return n + (n % 2)


def make_context(sym: ModelSymbol, tol: float = 1e-12, circle_nodes: int | None = None,
                 n_per_unit: float = 24.0, x_max: float = 0.0, abscissa: float | None = None,
                 extra_power: float = 1.0, extra_rate: float = 0.0, loop_nodes: int = 128,
                 imag_tol: float = 1e-8, T_cap: float = 400.0) -> KernelContext:
    """Default contours for ``sym``.

    ``x_max`` is the largest |x| at which kernels will be evaluated; it sets
    the node density needed to resolve the factor e^{-i y x} on the line.
    When the vertical line cannot be truncated (slow algebraic decay), the
    context carries a wedge contour instead, valid for x >= 0 only.
    """
    circle_nodes_given = circle_nodes is not None
    if circle_nodes is None:
        circle_nodes = circle_nodes_for(sym, x_max=x_max)
    sigma = build_circle(sym.sigma_center, sym.sigma_radius, circle_nodes, 1)
    dens = n_per_unit + 0.8 * x_max
    line, alt, note = None, None, ""
    if sym.line_kind == "loop":
        line = build_loop(sym.loop_center, sym.loop_radius, loop_nodes + 4 * int(x_max * sym.loop_radius),
                          sym.loop_orientation)
    else:
        try:
            line = build_vertical_line(sym, abscissa, tol=tol, n_per_unit=dens, extra_power=extra_power,
                                       extra_rate=extra_rate, T_cap=T_cap)
        except TruncationError as exc:
            note = str(exc)
            if sym.kind in ("LogGamma", "Mixed") and sym.n == sym.N:
                alt = build_bent_line(sym, abscissa, tol=tol, n_per_unit=dens)
        if line is not None and "right_abscissa" in sym.extra and abscissa is None:
            alt = build_vertical_line(sym, sym.extra["right_abscissa"], tol=tol, n_per_unit=dens,
                                      extra_power=extra_power, extra_rate=extra_rate, T_cap=T_cap)
    left = None
    if line is not None and alt is None and sym.line_kind == "vertical" and sym.domain == "RealLine":
        left = _left_line(sym, tol, dens, T_cap)
    build = dict(tol=tol, n_per_unit=n_per_unit, abscissa=abscissa, extra_power=extra_power,
                 extra_rate=extra_rate, loop_nodes=loop_nodes, imag_tol=imag_tol, T_cap=T_cap)
    if circle_nodes_given:
        build["circle_nodes"] = circle_nodes
    return KernelContext(sym, sigma, line, tol, imag_tol, alt, 0.0, note, float(x_max), build, left)


def _left_line(sym: ModelSymbol, tol: float, dens: float, T_cap: float) -> Contour | None:
    """Vertical line left of Sigma, or None when W does not decay fast enough there."""
    edge = sym.sigma_center - sym.sigma_radius
    gap = min(0.5, max(sym.line_abscissa - sym.sigma_center - sym.sigma_radius, 0.05))
    c = edge - gap
    lo = sym.strip[0]
    if math.isfinite(lo) and c <= lo:
        c = 0.5 * (lo + edge)
    try:
        return build_vertical_line(sym, c, tol=tol, n_per_unit=dens, T_cap=T_cap, near=edge - c)
    except (TruncationError, ValidationError):
        return None


def widened(ctx: KernelContext, x_max: float) -> KernelContext:
    """``ctx`` itself if it resolves |x| <= x_max, otherwise a rebuilt context that does."""
    if x_max <= ctx.x_max or not ctx.build:
        return ctx
    return make_context(ctx.sym, x_max=x_max, **ctx.build)


def _real(z: np.ndarray, ctx: KernelContext, what: str) -> np.ndarray:
    z = np.asarray(z)
    scale = float(np.max(np.abs(z))) if z.size else 0.0
    if scale > 0 and float(np.max(np.abs(z.imag))) > 100.0 * ctx.imag_tol * scale + 1e-15:
        raise NumericalError(f"{what}: imaginary residue {np.max(np.abs(z.imag)):.3g} "
                             f"exceeds tolerance relative to {scale:.3g}")
    return z.real.copy()


def _domain_mask(sym: ModelSymbol, x: np.ndarray) -> np.ndarray:
    """Where the loop representation applies (True) or the kernel vanishes (False)."""
    if sym.kind == "LUEext":
        return x > 0
    if sym.kind == "TruncUnitaryProduct":
        return x < 0
    return np.ones_like(x, dtype=bool)


def _v_contours(ctx: KernelContext, x: np.ndarray):
    """Pick the v-contour for each x; yields (mask, nodes, weights, logW)."""
    alt = ctx.alt_contour
    if ctx.left_contour is not None:
        neg = x < 0
        yield neg, ctx.left_contour.nodes, ctx.left_contour.weights, ctx.logW_l
        yield ~neg, ctx.line_contour.nodes, ctx.line_contour.weights, ctx.logW_v
        return
    if ctx.line_contour is None:
        if alt is None:
            raise TruncationError(f"no usable v-contour: {ctx.line_note}")
        pos = x >= ctx.alt_from
        if not np.all(pos):
            raise TruncationError(
                "W decays too slowly on vertical lines and the wedge contour only converges for "
                f"x >= {ctx.alt_from:g} (requested x = {x[~pos].min():g})")
        yield pos, alt.nodes, alt.weights, ctx.logW_b
        return
    if alt is None:
        yield np.ones_like(x, dtype=bool), ctx.line_contour.nodes, ctx.line_contour.weights, ctx.logW_v
        return
    pos = x >= ctx.alt_from
    yield ~pos, ctx.line_contour.nodes, ctx.line_contour.weights, ctx.logW_v
    yield pos, alt.nodes, alt.weights, ctx.logW_b


def _line_transform(ctx: KernelContext, x, factor) -> np.ndarray:
    """(1/2 pi i) sum_v w_v W(v) e^{-v x} factor(v)[:, j] for every x; shape (len(x), ncols)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = None
    for mask, v, w, lv in _v_contours(ctx, x):
        F = factor(v)
        if F.ndim == 1:
            F = F[:, None]
        if out is None:
            out = np.zeros((len(x), F.shape[1]), dtype=complex)
        if not np.any(mask):
            continue
        A = w[None, :] * np.exp(lv[None, :] - np.outer(x[mask], v))
        out[mask] = (A @ F) / TWO_PI_I
    out[~_domain_mask(ctx.sym, x)] = 0.0
    return out


def L_matrix(ctx: KernelContext, x, xp, check: bool = True) -> np.ndarray:
    """Kernel matrix L_N(x_i, x'_j).

    With ``check`` the imaginary residue must be negligible; without it the
    real part is returned as is (used for scans into regions where the
    quadrature only resolves the kernel's magnitude).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    u, wu = ctx.sigma_contour.nodes, ctx.sigma_contour.weights
    B = (wu * np.exp(-ctx.logW_u))[:, None] * np.exp(np.outer(u, xp))

    def factor(v):
        d = v[:, None] - u[None, :]
        if np.min(np.abs(d)) < COLLISION_TOL:
            raise ContourCollisionError("|v - u| below 1e-8")
        return (1.0 / d) @ B

    val = _line_transform(ctx, x, factor) / TWO_PI_I
    return _real(val, ctx, "L_N") if check else val.real.copy()


def eval_L(ctx: KernelContext, x, xp):
    """L_N(x, x') by tensor quadrature of the double contour integral."""
    val = L_matrix(ctx, x, xp)
    if np.isscalar(x) and np.isscalar(xp):
        return float(val[0, 0])
    return val


def eval_L_hat(ctx: KernelContext, s, sp):
    """Exponential-variable kernel with s^{-v-1} s'^u in place of e^{-vx + ux'}."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    sp_arr = np.atleast_1d(np.asarray(sp, dtype=float))
    if np.any(s_arr <= 0) or np.any(sp_arr <= 0):
        raise ValidationError("exponential variables must be positive")
    u, wu = ctx.sigma_contour.nodes, ctx.sigma_contour.weights
    lsp = np.log(sp_arr)
    B = (wu * np.exp(-ctx.logW_u))[:, None] * np.exp(np.outer(u, lsp))

    def factor(v):
        return (1.0 / (v[:, None] - u[None, :])) @ B

    ls = np.log(s_arr)
    val = _line_transform(ctx, ls, factor) / TWO_PI_I / s_arr[:, None]
    val = _real(val, ctx, "L_hat")
    if np.isscalar(s) and np.isscalar(sp):
        return float(val[0, 0])
    return val


def symbol_derivatives(ctx: KernelContext) -> np.ndarray:
    """W'(a_m) for m = 1..N (4-point central differences)."""
    return np.array([symbol_derivative_at_zero(ctx.sym, m) for m in range(ctx.sym.N)])


def psi_matrix(ctx: KernelContext, x) -> np.ndarray:
    """psi_k(e^x) for all k; shape (len(x), N).  Requires distinct zeros."""
    sym = ctx.sym
    if not sym.is_distinct:
        raise ConfluenceError(f"zeros closer than {CONFLUENCE_TOL:g}; psi_m is undefined, use phi_m")
    a = np.asarray(sym.a)
    dW = symbol_derivatives(ctx)

    def factor(v):
        return 1.0 / (v[:, None] - a[None, :])

    val = _line_transform(ctx, x, factor) / dW[None, :]
    return _real(val, ctx, "psi")


def eval_psi(ctx: KernelContext, m: int, y):
    """psi_m(y) for 1 <= m <= N and y > 0."""
    _check_index(ctx, m)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr <= 0):
        raise ValidationError("psi_m needs y > 0")
    val = psi_matrix(ctx, np.log(y_arr))[:, m - 1]
    return float(val[0]) if np.isscalar(y) else val


def phi_matrix(ctx: KernelContext, x) -> np.ndarray:
    """phi_k(e^x) for all k (confluent zeros); shape (len(x), N)."""
    sym = ctx.sym
    if not sym.is_confluent:
        raise NotConfluentError("phi_m needs all zeros equal")
    a = sym.a[0]
    N = sym.N
    powers = np.array([N - m + 1 for m in range(1, N + 1)])
    x = np.atleast_1d(np.asarray(x, dtype=float))

    def factor(v):
        return 1.0 / (v[:, None] - a) ** powers[None, :]

    val = _line_transform(ctx, x, factor) * np.exp(a * x)[:, None]
    return _real(val, ctx, "phi")


def eval_phi(ctx: KernelContext, m: int, y):
    """phi_m(y) = y^a (2 pi i)^{-1} int W(v) y^{-v} / (v - a)^{N-m+1} dv."""
    _check_index(ctx, m)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr <= 0):
        raise ValidationError("phi_m needs y > 0")
    val = phi_matrix(ctx, np.log(y_arr))[:, m - 1]
    return float(val[0]) if np.isscalar(y) else val


def _check_index(ctx: KernelContext, m: int) -> None:
    if not (isinstance(m, (int, np.integer)) and 1 <= m <= ctx.sym.N):
        raise ValidationError(f"index m must be in 1..{ctx.sym.N}")


def eval_Psi1(ctx: KernelContext, s):
    """Psi_1(s) = (2 pi i)^{-1} closed integral of s^u / W(u)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    u, wu = ctx.sigma_contour.nodes, ctx.sigma_contour.weights
    val = (np.exp(np.outer(np.log(s_arr), u) - ctx.logW_u[None, :]) @ wu) / TWO_PI_I
    val = _real(val, ctx, "Psi1")
    return float(val[0]) if np.isscalar(s) else val


def _require_H_decay(sym: ModelSymbol) -> None:
    if not sym.decay_exponent > 1:
        raise DecayError(f"Psi_2 needs W = O(|v|^(-1-eps)); decay exponent is {sym.decay_exponent:g}")
    if sym.line_kind != "vertical":
        raise DecayError("Psi_2 needs a vertical line contour")


def eval_Psi2(ctx: KernelContext, s):
    """Psi_2(s) = inverse Mellin transform of W along the line."""
    _require_H_decay(ctx.sym)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    val = _line_transform(ctx, np.log(s_arr), lambda v: np.ones(len(v), dtype=complex))[:, 0]
    val = _real(val, ctx, "Psi2")
    return float(val[0]) if np.isscalar(s) else val


def H_matrix(ctx: KernelContext, sigma: SigmaSpec, y, yp, check: bool = True) -> np.ndarray:
    """H^sigma(y_i, y'_j) with the x integral done in closed form.

    int sigma(x) e^{(u - v) x} dx = F(v - u), where F is the Laplace-type
    transform from ``SigmaSpec.mellin``; the remaining double contour integral
    is assembled like L.
    """
    _require_H_decay(ctx.sym)
    if sigma.kind == "zero":
        return np.zeros((np.size(y), np.size(yp)))
    if sigma.mellin(0.5) is None:
        raise ValidationError("closed-form H needs a Fermi, indicator or zero sigma; use method='grid'")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    yp = np.atleast_1d(np.asarray(yp, dtype=float))
    u, wu = ctx.sigma_contour.nodes, ctx.sigma_contour.weights
    A = (wu * np.exp(-ctx.logW_u))[None, :] * np.exp(np.outer(y, u))  # (ny, nu)

    def factor(v):
        F = sigma.mellin(v[None, :] - u[:, None])  # (nu, nv)
        return (A @ F).T  # (nv, ny)

    # _line_transform supplies w_v W(v) e^{-v y'} for each y'
    val = _line_transform(ctx, yp, factor).T / TWO_PI_I  # (ny, ny')
    return _real(val, ctx, "H") if check else val.real.copy()


def H_matrix_grid(ctx: KernelContext, sigma: SigmaSpec, y, yp, x_lo: float = -40.0, x_hi: float = 40.0,
                  n_per_unit: float = 6.0) -> np.ndarray:
    """H^sigma by direct quadrature of sigma(x) Psi_1(e^{y+x}) Psi_2(e^{y'+x}) over x."""
    _require_H_decay(ctx.sym)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    yp = np.atleast_1d(np.asarray(yp, dtype=float))
    grid = build_graded_grid(x_lo, x_hi, sigma.breakpoints, n_per_unit=n_per_unit, nodes_per_panel=16)
    xs, wx = grid.points, grid.weights
    sx = sigma(xs)
    keep = sx != 0
    xs, wx, sx = xs[keep], wx[keep], sx[keep]
    z1 = (y[:, None] + xs[None, :]).ravel()
    z2 = (yp[:, None] + xs[None, :]).ravel()
    P1 = np.asarray(eval_Psi1(ctx, np.exp(z1))).reshape(len(y), len(xs))
    P2 = np.asarray(eval_Psi2(ctx, np.exp(z2))).reshape(len(yp), len(xs))
    return (P1 * (wx * sx)[None, :]) @ P2.T


def eval_H_sigma(ctx: KernelContext, sigma: SigmaSpec, y, yp, method: str = "closed"):
    """H^sigma(y, y') = int sigma(x) Psi_1(e^{y+x}) Psi_2(e^{y'+x}) dx for y, y' > 0.

    method "closed" uses the transform of sigma (Fermi, indicator, zero);
    "grid" integrates over x numerically and accepts any sigma.
    """
    if method == "grid" or (method == "closed" and sigma.kind == "custom"):
        val = H_matrix_grid(ctx, sigma, y, yp)
    elif method == "closed":
        val = H_matrix(ctx, sigma, y, yp)
    else:
        raise ValidationError(f"unknown method {method!r}")
    if np.isscalar(y) and np.isscalar(yp):
        return float(val[0, 0])
    return val


def _sin_check(d: np.ndarray) -> None:
    dist = np.abs(d - np.round(d.real))
    if np.min(dist) < COLLISION_TOL:
        raise SinPoleError("u - v within 1e-8 of an integer")


def K_matrix(ctx: KernelContext, t: float, u=None, up=None, weighted: bool = False) -> np.ndarray:
    """K_{N,t}(u_i, u'_j) on sigma nodes (default) or given points.

    With ``weighted`` the trapezoid weights of the sigma contour are folded
    into the columns, giving the Nystrom matrix whose det(I + K) approximates
    the Fredholm determinant on L^2(Sigma).
    """
    sym = ctx.sym
    if ctx.line_contour is None or sym.line_kind != "vertical":
        raise DecayError("K form needs a truncatable vertical line")
    uu = ctx.sigma_contour.nodes if u is None else np.atleast_1d(np.asarray(u, dtype=complex))
    upp = ctx.sigma_contour.nodes if up is None else np.atleast_1d(np.asarray(up, dtype=complex))
    lu = ctx.logW_u if u is None else log_symbol(sym, uu)
    v, wv, lv = ctx.line_contour.nodes, ctx.line_contour.weights, ctx.logW_v
    d = uu[:, None] - v[None, :]
    _sin_check(d)
    re = -d.real
    if np.any(re <= 0) or np.any(re >= 1):
        raise SinPoleError("contours violate 0 < Re(v - u) < 1")
    S = pi_over_sin(d) * np.exp(-t * d + lv[None, :] - lu[:, None]) * wv[None, :]
    dd = v[:, None] - upp[None, :]
    if np.min(np.abs(dd)) < COLLISION_TOL:
        raise ContourCollisionError("|v - u'| below 1e-8")
    K = (S @ (1.0 / dd)) / TWO_PI_I ** 2
    if weighted:
        K = K * ctx.sigma_contour.weights[None, :]
    return K


def eval_K(ctx: KernelContext, t: float, u, up):
    """K_{N,t}(u, u') as a single line-contour quadrature (complex valued)."""
    val = K_matrix(ctx, t, u, up)
    if np.isscalar(u) and np.isscalar(up):
        return complex(val[0, 0])
    return val


# mixed polymer functions Phi_k, Psi_k

def _check_mixed(sym: ModelSymbol) -> None:
    if sym.kind != "Mixed":
        raise ValidationError("Phi_k / Psi_k are defined for the mixed polymer only")
    a = np.asarray(sym.a)
    d = a[:, None] - a[None, :]
    off = ~np.eye(len(a), dtype=bool)
    near_int = np.abs(d - np.round(d)) < 1e-9
    if np.any(near_int & off):
        raise IntegerGapError("two zeros a_j, a_k differ by an integer")


def _mixed_log_common(sym: ModelSymbol, z: np.ndarray) -> np.ndarray:
    # log prod_j Gamma(1 + z - a_j) / Gamma(1 + alpha_j - z)
    return sum(log_gamma(1.0 + z - aj) - log_gamma(1.0 + al - z) for aj, al in zip(sym.a, sym.alpha))


def eval_mixed_Phi(ctx: KernelContext, k: int, x):
    """Phi_k(x) by the trapezoid rule on the sigma circle."""
    sym = ctx.sym
    _check_mixed(sym)
    _check_index(ctx, k)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    u, wu = ctx.sigma_contour.nodes, ctx.sigma_contour.weights
    a, al = sym.a, sym.alpha
    lg = _mixed_log_common(sym, u) - 0.5 * sym.tau * u * u - np.log(u - a[k - 1])
    for j in range(k - 1):
        lg = lg + np.log(u - al[j]) - np.log(u - a[j])
    val = np.exp(np.outer(x_arr, u) + lg[None, :]) @ wu / TWO_PI_I
    val = _real(val, ctx, "Phi_k")
    return float(val[0]) if np.isscalar(x) else val


def _mixed_psi_log(sym: ModelSymbol, k: int, w: np.ndarray) -> np.ndarray:
    # log of the Psi_k integrand without e^{-iwx}, at real w
    a, al = sym.a, sym.alpha
    iw = 1j * np.asarray(w, dtype=float)
    lg = sum(log_gamma(1.0 + alj - iw) - log_gamma(1.0 + iw - aj) for aj, alj in zip(a, al))
    lg = lg - 0.5 * sym.tau * iw.imag ** 2 - np.log(al[k - 1] - iw)
    with np.errstate(divide="ignore"):  # the integrand vanishes where iw = a_j
        for j in range(k - 1):
            lg = lg + np.log(iw - a[j]) - np.log(iw - al[j])
    return lg


def _mixed_psi_line(sym: ModelSymbol, k: int, tol: float, x_max: float) -> Contour:
    # the w-integral over the real line, written as v = i w on Re v = 0
    return build_generic_line(0.0, lambda y: _mixed_psi_log(sym, k, y).real, tol=tol,
                              n_per_unit=24 + 0.8 * x_max, near=0.5)


def eval_mixed_Psi(ctx: KernelContext, k: int, x, x_max: float | None = None):
    """Psi_k(x) by Gauss-Legendre quadrature over the real w axis."""
    sym = ctx.sym
    _check_mixed(sym)
    _check_index(ctx, k)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    xm = float(np.max(np.abs(x_arr))) if x_max is None else x_max
    line = _mixed_psi_line(sym, k, ctx.tolerance, xm)
    w = line.nodes.imag
    dw = line.weights.imag  # weights are i dy
    lg = _mixed_psi_log(sym, k, w)
    a, al = sym.a, sym.alpha
    val = np.exp(-1j * np.outer(x_arr, w) + lg[None, :]) @ dw
    val = val * (al[k - 1] - a[k - 1]) / (2.0 * math.pi)
    val = _real(val, ctx, "Psi_k")
    return float(val[0]) if np.isscalar(x) else val


def meijer_g_n0(orders, b_params, z, line: Contour | float | None = None, tol: float = 1e-12,
                n_per_unit: float = 24.0):
    """G^{n,0}_{0,q}(- ; b_1..b_q | z) for z > 0 by quadrature on a vertical line.

    The line separates the poles b_l + k (l <= n) of the numerator gammas,
    i.e. its abscissa is below min(b_1..b_n).  ``line`` may be a prebuilt
    contour, an abscissa, or None (abscissa min(b_1..b_n) - 1/2).
    """
    n, q = int(orders[0]), int(orders[1])
    b = np.asarray(b_params, dtype=float)
    if not (0 <= n <= q and len(b) == q):
        raise ValidationError("meijer_g_n0 needs 0 <= n <= q parameters")
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0):
        raise ValidationError("meijer_g_n0 needs z > 0")
    top, bottom = b[:n], b[n:]

    def logint(v):
        return (sum(log_gamma(bl - v) for bl in top) - sum(log_gamma(1.0 - bl + v) for bl in bottom))

    if not isinstance(line, Contour):
        c = (float(np.min(top)) - 0.5 if n > 0 else 0.0) if line is None else float(line)
        if n > 0 and not c < np.min(top):
            raise ValidationError("line must lie to the left of the poles b_1..b_n")
        lz = float(np.max(np.abs(np.log(z_arr))))
        line = build_generic_line(c, lambda y: logint(c + 1j * y).real + c * lz, tol=tol,
                                  n_per_unit=n_per_unit + 0.8 * lz, near=0.5)
    v, w = line.nodes, line.weights
    val = np.exp(np.outer(np.log(z_arr), v) + logint(v)[None, :]) @ w / TWO_PI_I
    if np.max(np.abs(val.imag)) > 1e-6 * max(1e-300, np.max(np.abs(val))):
        raise NumericalError("Meijer G quadrature has a large imaginary residue")
    val = val.real
    return float(val[0]) if np.isscalar(z) else val


def trace_grid_limits(ctx: KernelContext, lo: float = -60.0, hi: float = 60.0, rel: float = 1e-15):
    """Range of x where |L(x, x)| exceeds ``rel`` times its maximum (coarse scan)."""
    sym = ctx.sym
    if sym.kind == "LUEext":
        lo = max(lo, 0.0)
    if sym.kind == "TruncUnitaryProduct":
        hi = min(hi, 0.0)
    xs = np.linspace(lo, hi, int((hi - lo) * 2) + 1)
    d = np.abs(np.diag(L_matrix(ctx, xs, xs)))
    big = np.nonzero(d > rel * d.max())[0]
    return float(xs[max(big[0] - 1, 0)]), float(xs[min(big[-1] + 1, len(xs) - 1)])


# ---------------------------------------------------------------- invariant checks

def _scan_range(ctx: KernelContext, magnitude, limit: float = 80.0, rel: float = 1e-14,
                core: float = 10.0, max_limit: float = 1280.0):
    """Interval around the bulk where ``magnitude`` stays above ``rel`` times its peak.

    The peak is taken within |x| <= ``core`` and the scan walks outward from
    it, stopping at the first drop below the threshold; far tails where the
    quadrature only produces cancellation noise are never reached.  The scan
    window doubles (up to ``max_limit``) while the walk reaches its edge.
    """
    while True:
        lo, hi = -limit, limit
        if ctx.sym.kind == "LUEext":
            lo = 0.0
        if ctx.sym.kind == "TruncUnitaryProduct":
            hi = 0.0
        if ctx.line_contour is None and ctx.alt_contour is not None and lo < ctx.alt_from:
            raise DecayError(f"kernel only available for x >= {ctx.alt_from:g}: {ctx.line_note}")
        xs = np.linspace(lo, hi, int((hi - lo) * 4) + 1)
        d = magnitude(widened(ctx, limit), xs)
        inner = np.nonzero(np.abs(xs) <= core)[0]
        if len(inner) == 0:
            inner = np.arange(len(xs))
        i_pk = inner[np.argmax(d[inner])]
        cut = rel * d[i_pk]
        i0 = i_pk
        while i0 > 0 and d[i0] > cut:
            i0 -= 1
        i1 = i_pk
        while i1 < len(xs) - 1 and d[i1] > cut:
            i1 += 1
        open_edge = (i0 == 0 and lo < 0.0) or (i1 == len(xs) - 1 and hi > 0.0)
        if not open_edge or 2 * limit > max_limit:
            return float(xs[i0]), float(xs[i1])
        limit *= 2


def invariant_grid(ctx: KernelContext, per_unit: float = 8.0, rel: float = 1e-14):
    """Context and Gauss-Legendre grid covering the bulk of L(x, x).

    Returns (ctx', x, w) where ctx' resolves the kernel on the whole grid.
    """
    def mag(c, xs):
        return np.abs(np.einsum("ii->i", L_matrix(c, xs, xs, check=False)))

    x_lo, x_hi = _scan_range(ctx, mag, rel=rel)
    breaks = (0.0,) if x_lo < 0.0 < x_hi else ()
    g = build_graded_grid(x_lo, x_hi, breaks, n_per_unit=per_unit, nodes_per_panel=16)
    wctx = widened(ctx, max(abs(x_lo), abs(x_hi)))
    return wctx, g.points, g.weights


def biorthogonality_matrix(ctx: KernelContext, per_unit: float = 8.0) -> np.ndarray:
    """B[m, k] = int e^{a_m x} psi_k(e^x) dx, which should be the identity."""
    wctx, x, w = invariant_grid(ctx, per_unit)
    a = np.asarray(ctx.sym.a)
    P = psi_matrix(wctx, x)
    E = np.exp(np.outer(x, a))
    return (E * w[:, None]).T @ P


def trace_integral(ctx: KernelContext, per_unit: float = 8.0) -> float:
    """int L(x, x) dx, which should equal N."""
    wctx, x, w = invariant_grid(ctx, per_unit)
    return float(np.sum(w * np.einsum("ii->i", L_matrix(wctx, x, x))))


def reproducing_residual(ctx: KernelContext, points, per_unit: float = 8.0) -> float:
    """max |int L(x, s) L(s, x') ds - L(x, x')| / max |L| over points x, x'."""
    wctx, s, w = invariant_grid(ctx, per_unit)
    p = np.atleast_1d(np.asarray(points, dtype=float))
    pctx = widened(wctx, float(np.max(np.abs(p))))
    lhs = (L_matrix(pctx, p, s) * w[None, :]) @ L_matrix(wctx, s, p)
    rhs = L_matrix(pctx, p, p)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


def bulk_points(ctx: KernelContext, k: int = 3) -> np.ndarray:
    """k points at evenly spaced quantiles of the mass of |L(x, x)|."""
    wctx, x, w = invariant_grid(ctx)
    m = np.cumsum(w * np.abs(np.einsum("ii->i", L_matrix(wctx, x, x))))
    q = (np.arange(k) + 1.0) / (k + 1.0)
    return np.round(x[np.searchsorted(m / m[-1], q)], 6)
