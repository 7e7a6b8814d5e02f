"""Discretised contours and real-line quadrature grids.

Closed loops use the trapezoid rule in the angle, which converges
geometrically for analytic integrands.  Vertical lines use composite
Gauss-Legendre panels; panels are graded towards y = 0 when a singularity of
the integrand (the other contour, or a pole of 1/sin) comes close to the line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import TruncationError, ValidationError
from .models import GAUSSIAN_DECAY, ModelSymbol, log_symbol

DEFAULT_CIRCLE_NODES = 64
DEFAULT_NODES_PER_UNIT = 24
DEFAULT_T_CAP = 400.0


@dataclass(frozen=True)
class Contour:
    """Nodes and weights with sum(w * f(z)) ~ integral of f(z) dz along the contour."""

    shape: str  # "circle", "line", "loop" or "bent"
    nodes: np.ndarray
    weights: np.ndarray
    center: complex = 0.0
    radius: float = 0.0
    orientation: int = 1
    abscissa: float = 0.0
    halfheight: float = 0.0
    tail_bound: float = 0.0
    slope: float = 0.0
    build_args: tuple = ()

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * np.asarray(values)))

    def refined(self) -> "Contour":
        """The same contour with twice the node density."""
        kind, args = self.build_args[0], dict(self.build_args[1])
        if kind == "circle":
            args["n_nodes"] *= 2
            return replace(build_circle(**args), shape=self.shape)
        args["n_per_unit"] *= 2
        args["panel_nodes"] = args.get("panel_nodes", 20) * 2
        return _BUILD_LINE[kind](**args)


@dataclass(frozen=True)
class RealGrid:
    points: np.ndarray
    weights: np.ndarray
    support: tuple[float, float]

    def __len__(self) -> int:
        return len(self.points)


def build_circle(center, radius: float, n_nodes: int = DEFAULT_CIRCLE_NODES, orientation: int = 1) -> Contour:
    """Equispaced trapezoid rule on a circle; orientation +1 is counterclockwise."""
    if n_nodes < 8 or n_nodes % 2:
        raise ValidationError("n_nodes must be even and at least 8")
    if radius <= 0:
        raise ValidationError("radius must be positive")
    if orientation not in (1, -1):
        raise ValidationError("orientation must be +1 or -1")
    theta = 2.0 * np.pi * (np.arange(n_nodes) + 0.5) / n_nodes
    e = np.exp(1j * theta)
    nodes = center + radius * e
    weights = orientation * 1j * radius * e * (2.0 * np.pi / n_nodes)
    args = dict(center=center, radius=radius, n_nodes=n_nodes, orientation=orientation)
    return Contour("circle", nodes, weights, center=complex(center), radius=float(radius),
                   orientation=orientation, build_args=("circle", tuple(args.items())))


def _gl_panels(edges: np.ndarray, nodes_per_panel) -> tuple[np.ndarray, np.ndarray]:
    pts, wts = [], []
    counts = np.broadcast_to(np.asarray(nodes_per_panel), (len(edges) - 1,))
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for lo, hi, k in zip(edges[:-1], edges[1:], counts):
        k = int(k)
        if k not in cache:
            cache[k] = leggauss(k)
        x, w = cache[k]
        half = 0.5 * (hi - lo)
        pts.append(lo + half * (x + 1.0))
        wts.append(half * w)
    return np.concatenate(pts), np.concatenate(wts)


def build_real_grid(x_lo: float, x_hi: float, n_panels: int, nodes_per_panel: int) -> RealGrid:
    """Composite Gauss-Legendre rule with equal panels on [x_lo, x_hi]."""
    if not x_lo < x_hi:
        raise ValidationError("x_lo < x_hi required")
    if n_panels < 1 or nodes_per_panel < 1:
        raise ValidationError("n_panels and nodes_per_panel must be positive")
    edges = np.linspace(x_lo, x_hi, n_panels + 1)
    p, w = _gl_panels(edges, nodes_per_panel)
    return RealGrid(p, w, (float(x_lo), float(x_hi)))


def build_graded_grid(x_lo: float, x_hi: float, breakpoints=(), n_per_unit: float = 8.0,
                      nodes_per_panel: int = 16, fine: float | None = None) -> RealGrid:
    """Gauss-Legendre grid with panel edges at the given breakpoints.

    Panels have length about nodes_per_panel / n_per_unit.  ``fine`` shrinks
    the panels adjacent to each breakpoint geometrically down to that length,
    which resolves a kink or jump of the integrand there.
    """
    if not x_lo < x_hi:
        raise ValidationError("x_lo < x_hi required")
    h = nodes_per_panel / n_per_unit
    cuts = {x_lo, x_hi}
    for b in breakpoints:
        if x_lo < b < x_hi:
            cuts.add(float(b))
            if fine:
                step = fine
                while step < h:
                    for s in (b - step, b + step):
                        if x_lo < s < x_hi:
                            cuts.add(s)
                    step *= 2.0
    cuts = sorted(cuts)
    edges = [cuts[0]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(math.ceil((hi - lo) / h - 1e-9)))
        edges.extend(np.linspace(lo, hi, m + 1)[1:])
    edges = np.asarray(edges)
    p, w = _gl_panels(edges, nodes_per_panel)
    return RealGrid(p, w, (float(x_lo), float(x_hi)))


def _log_modulus_profile(sym: ModelSymbol, c: float, T_cap: float):
    """log|W(c + iy)| on a grid of y >= 0 (W is conjugate-symmetric)."""
    y = np.unique(np.concatenate([np.linspace(0.0, 2.0, 401), np.arange(2.0, T_cap + 0.25, 0.25)]))
    lw = log_symbol(sym, c + 1j * y).real
    return y, lw


def line_halfheight(sym: ModelSymbol, c: float, tol: float, extra_rate: float = 0.0,
                    extra_power: float = 1.0, T_cap: float = DEFAULT_T_CAP) -> tuple[float, float]:
    """Smallest T with tail integral of |W(c+iy)| e^{-extra_rate|y|} / (1+|y|)^extra_power
    beyond T below tol times the peak; returns (T, tail_bound relative to peak)."""
    y, lw = _log_modulus_profile(sym, c, T_cap)
    g = lw - extra_rate * y - extra_power * np.log1p(y)
    return _halfheight_from_profile(y, g, tol, T_cap, c)


def _halfheight_from_profile(y: np.ndarray, g: np.ndarray, tol: float, T_cap: float, c: float):
    peak = g.max()
    f = np.exp(g - peak)
    # reverse cumulative trapezoid
    seg = 0.5 * (f[1:] + f[:-1]) * np.diff(y)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    # extrapolate past T_cap with the local power/exponential law of the last stretch
    k = max(len(y) - 40, 1)
    dy = y[-1] - y[k]
    rate = -(g[-1] - g[k]) / dy if dy > 0 else 0.0
    if rate > 1e-3:
        beyond = f[-1] / rate
    else:
        slope = -(g[-1] - g[k]) / (math.log(y[-1]) - math.log(y[k]))
        beyond = f[-1] * y[-1] / (slope - 1.0) if slope > 1.0 else math.inf
    tail = tail + beyond
    ok = np.nonzero(tail <= tol)[0]
    if len(ok) == 0 or y[ok[0]] >= T_cap:
        raise TruncationError(
            f"vertical line at c={c:g} needs halfheight beyond {T_cap:g} for tol={tol:g} "
            f"(relative tail {tail[-1] if np.isfinite(tail[-1]) else math.inf:.3g})"
        )
    i = ok[0]
    T = float(y[i]) * 1.05 + 0.5
    return min(T, T_cap), float(tail[min(np.searchsorted(y, T), len(y) - 1)])


def build_generic_line(c: float, logmod, tol: float = 1e-12, n_per_unit: float = DEFAULT_NODES_PER_UNIT,
                       near: float = 0.5, T_cap: float = DEFAULT_T_CAP, panel_nodes: int = 20) -> Contour:
    """Vertical line for an arbitrary integrand whose log-modulus on Re v = c is ``logmod(y)``."""
    y = np.unique(np.concatenate([np.linspace(0.0, 2.0, 401), np.arange(2.0, T_cap + 0.25, 0.25)]))
    g = np.asarray(logmod(y), dtype=float)
    T, tail = _halfheight_from_profile(y, g, tol, T_cap, c)
    nodes, weights = _symmetric_line(c, T, near, n_per_unit, panel_nodes)
    return Contour("line", nodes, weights, abscissa=c, halfheight=T, tail_bound=tail)


def near_distance(sym: ModelSymbol, c: float) -> float:
    """Distance from the line Re v = c to the nearest singularity of the integrands:
    the sigma circle, and (K form) the shifted circle u + 1."""
    right = sym.sigma_center + sym.sigma_radius
    left = sym.sigma_center - sym.sigma_radius
    d = c - right
    if c - left < 1:
        d = min(d, 1.0 - (c - left))
    return max(d, 1e-6)


def _line_edges(T: float, near: float, n_per_unit: float, panel_nodes: int):
    """Positive half of the panel edges, graded towards 0 on the scale 2*near."""
    edges = [0.0]
    L = 2.0 * near
    while L < 1.0 and L < T:
        edges.append(L)
        L *= 2.0
    start = edges[-1]
    if start < T:
        m = max(1, int(math.ceil((T - start) - 1e-9)))
        edges.extend(np.linspace(start, T, m + 1)[1:])
    edges = np.asarray(edges)
    counts = np.maximum(panel_nodes, np.ceil(np.diff(edges) * n_per_unit))
    return edges, counts.astype(int)


def _symmetric_line(c: float, T: float, near: float, n_per_unit: float, panel_nodes: int,
                    slope: float = 0.0):
    edges, counts = _line_edges(T, near, n_per_unit, panel_nodes)
    yp, wp = _gl_panels(edges, counts)
    y = np.concatenate([-yp[::-1], yp])
    w = np.concatenate([wp[::-1], wp])
    # v = c + slope*|y| + i y, dv = (slope*sign(y) + i) dy
    nodes = c + slope * np.abs(y) + 1j * y
    weights = (slope * np.sign(y) + 1j) * w
    return nodes, weights


def build_vertical_line(sym: ModelSymbol, c: float | None = None, tol: float = 1e-12,
                        n_per_unit: float = DEFAULT_NODES_PER_UNIT, T_cap: float = DEFAULT_T_CAP,
                        extra_rate: float = 0.0, extra_power: float = 1.0, near: float | None = None,
                        panel_nodes: int = 20, halfheight: float | None = None) -> Contour:
    """Upward line Re v = c truncated to |Im v| <= T.

    T is chosen from the modulus of W on the line so that the discarded tail is
    below ``tol`` relative to the peak.  ``extra_rate`` and ``extra_power``
    account for companion factors such as 1/(v - u) (power 1) or pi/sin (rate pi).
    """
    c = sym.line_abscissa if c is None else float(c)
    lo, hi = sym.strip
    if not lo < c < hi:
        raise ValidationError(f"abscissa c={c:g} is outside the strip ({lo:g}, {hi:g})")
    if halfheight is None:
        T, tail = line_halfheight(sym, c, tol, extra_rate, extra_power, T_cap)
    else:
        T, tail = float(halfheight), 0.0
    d = near_distance(sym, c) if near is None else near
    nodes, weights = _symmetric_line(c, T, d, n_per_unit, panel_nodes)
    args = dict(sym=sym, c=c, tol=tol, n_per_unit=n_per_unit, T_cap=T_cap, extra_rate=extra_rate,
                extra_power=extra_power, near=d, panel_nodes=panel_nodes, halfheight=T)
    return Contour("line", nodes, weights, abscissa=c, halfheight=T, tail_bound=tail,
                   build_args=("line", tuple(args.items())))


def build_bent_line(sym: ModelSymbol, c: float | None = None, slope: float = 1.0, tol: float = 1e-12,
                    n_per_unit: float = DEFAULT_NODES_PER_UNIT, T_cap: float = 60.0,
                    near: float | None = None, panel_nodes: int = 20,
                    halfheight: float | None = None) -> Contour:
    """Wedge v = c + slope|y| + iy opening to the right.

    Used for gamma-ratio symbols with algebraic decay on vertical lines: when
    W has more 1/Gamma(v - a) factors than poles to the right, W decays
    super-exponentially along the wedge.  The poles of W are real and are not
    swept when deforming the vertical line into the wedge.  Only suitable for
    integrands whose remaining factors stay bounded to the right, e.g. y^{-v}
    with y >= 1.
    """
    c = sym.line_abscissa if c is None else float(c)
    if halfheight is None:
        y = np.linspace(0.0, T_cap, int(T_cap * 8) + 1)
        g = log_symbol(sym, c + slope * y + 1j * y).real - np.log1p(y)
        f = np.exp(g - g.max())
        seg = 0.5 * (f[1:] + f[:-1]) * np.diff(y)
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        ok = np.nonzero(tail <= tol)[0]
        if len(ok) == 0 or ok[0] == len(y) - 1:
            raise TruncationError(f"bent line at c={c:g} does not decay within |Im v| <= {T_cap:g}")
        T = float(y[ok[0]]) * 1.05 + 0.5
        tail_bound = float(tail[ok[0]])
    else:
        T, tail_bound = float(halfheight), 0.0
    d = near_distance(sym, c) if near is None else near
    nodes, weights = _symmetric_line(c, T, d, n_per_unit, panel_nodes, slope=slope)
    args = dict(sym=sym, c=c, slope=slope, tol=tol, n_per_unit=n_per_unit, T_cap=T_cap, near=d,
                panel_nodes=panel_nodes, halfheight=T)
    return Contour("bent", nodes, weights, abscissa=c, halfheight=T, tail_bound=tail_bound,
                   slope=slope, build_args=("bent", tuple(args.items())))


def build_loop(center: float, radius: float, n_nodes: int = DEFAULT_CIRCLE_NODES, orientation: int = 1) -> Contour:
    """Closed circle used in place of a vertical line (LUE+ and truncated unitary symbols)."""
    base = build_circle(center, radius, n_nodes, orientation)
    return replace(base, shape="loop")


def default_line(sym: ModelSymbol, tol: float = 1e-12, n_per_unit: float = DEFAULT_NODES_PER_UNIT,
                 loop_nodes: int = 128, **kw) -> Contour:
    """The symbol's default v-contour: its loop, or a truncated vertical line."""
    if sym.line_kind == "loop":
        return build_loop(sym.loop_center, sym.loop_radius, loop_nodes, sym.loop_orientation)
    return build_vertical_line(sym, tol=tol, n_per_unit=n_per_unit, **kw)


def default_sigma(sym: ModelSymbol, n_nodes: int = DEFAULT_CIRCLE_NODES) -> Contour:
    return build_circle(sym.sigma_center, sym.sigma_radius, n_nodes, 1)


def decays_exponentially(sym: ModelSymbol) -> bool:
    return sym.decay_exponent >= GAUSSIAN_DECAY


_BUILD_LINE = {"line": build_vertical_line, "bent": build_bent_line}
