"""Symbols W_N for the supported polymer and random-matrix models.

A symbol carries its parameters, the analytic strip, the zeros a_1..a_N that
the closed contour must enclose, default contour geometry and decay metadata.
``log_symbol`` evaluates log W_N term by term so that differences of logs
exponentiate to the correct ratios W(v)/W(u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import IntegerGapError, PoleError, ValidationError, ZeroError
from .specfun import log_gamma

KINDS = (
    "LogGamma",
    "OY",
    "Mixed",
    "LUEext",
    "GUEext",
    "GLUEext",
    "GinibreProduct",
    "MuttalibBorodinLUE",
    "TruncUnitaryProduct",
)

ALIASES = {
    "loggamma": "LogGamma",
    "oy": "OY",
    "mixed": "Mixed",
    "lue": "LUEext",
    "lueext": "LUEext",
    "gue": "GUEext",
    "gueext": "GUEext",
    "glue": "GLUEext",
    "glueext": "GLUEext",
    "ginibre": "GinibreProduct",
    "ginibreproduct": "GinibreProduct",
    "mb": "MuttalibBorodinLUE",
    "muttalibborodinlue": "MuttalibBorodinLUE",
    "truncunitary": "TruncUnitaryProduct",
    "truncunitaryproduct": "TruncUnitaryProduct",
}

GAUSSIAN_DECAY = 1e9  # sentinel exponent for super-algebraic decay
CONFLUENCE_TOL = 1e-6
ZERO_TOL = 1e-12

POLYMER_KINDS = ("LogGamma", "OY", "Mixed")
MATRIX_KINDS = ("LUEext", "GUEext", "GLUEext", "GinibreProduct")
EXPONENTIAL_KINDS = ("GinibreProduct", "MuttalibBorodinLUE", "TruncUnitaryProduct")


@dataclass(frozen=True)
class ModelSymbol:
    kind: str
    N: int
    a: tuple[float, ...]
    n: int | None = None
    alpha: tuple[float, ...] = ()
    b: tuple[float, ...] = ()
    nu: float | None = None
    tau: float | None = None
    theta: float | None = None
    nus: tuple[float, ...] = ()
    ells: tuple[float, ...] = ()
    strip: tuple[float, float] = (-math.inf, math.inf)
    domain: str = "RealLine"
    decay_exponent: float = GAUSSIAN_DECAY
    # default contour geometry
    sigma_center: float = 0.0
    sigma_radius: float = 0.5
    line_abscissa: float = 1.0
    # "vertical" for an upward line, "loop" for a closed circle replacing it
    line_kind: str = "vertical"
    loop_center: float = 0.0
    loop_radius: float = 0.0
    loop_orientation: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def a_min(self) -> float:
        return min(self.a)

    @property
    def a_max(self) -> float:
        return max(self.a)

    @property
    def zero_gap(self) -> float:
        """Smallest pairwise distance between the zeros (inf when N == 1)."""
        if self.N == 1:
            return math.inf
        z = np.sort(np.asarray(self.a))
        return float(np.min(np.diff(z)))

    @property
    def is_confluent(self) -> bool:
        return self.N == 1 or (max(self.a) - min(self.a)) < CONFLUENCE_TOL

    @property
    def is_distinct(self) -> bool:
        return self.zero_gap >= CONFLUENCE_TOL

    def with_contours(self, **kw) -> "ModelSymbol":
        """Copy with modified contour geometry (re-checked for admissibility)."""
        new = replace(self, **kw)
        _check_geometry(new)
        return new

    def params(self) -> dict:
        """Flat parameter dictionary (round-trips through ``make_symbol``)."""
        out: dict = {"N": self.N}
        if self.kind in ("LogGamma", "Mixed"):
            out["n"] = self.n
            out["alpha"] = list(self.alpha)
        if self.kind in ("LogGamma", "OY", "Mixed", "GUEext"):
            out["a"] = list(self.a)
        if self.kind in ("LUEext", "GLUEext"):
            out["b"] = list(self.b)
        if self.kind in ("LUEext", "MuttalibBorodinLUE"):
            out["nu"] = self.nu
        if self.tau is not None:
            out["tau"] = self.tau
        if self.kind == "MuttalibBorodinLUE":
            out["theta"] = self.theta
        if self.kind in ("GinibreProduct", "TruncUnitaryProduct"):
            out["nus"] = list(self.nus)
        if self.kind == "TruncUnitaryProduct":
            out["ells"] = list(self.ells)
        return out


@dataclass(frozen=True)
class RepresentationFlags:
    matrix_ok: bool
    L_ok: bool
    H_ok: bool
    K_ok: bool
    reason_if_not: dict

    def as_dict(self) -> dict:
        return {
            "matrix_ok": self.matrix_ok,
            "L_ok": self.L_ok,
            "H_ok": self.H_ok,
            "K_ok": self.K_ok,
            "reasons": dict(self.reason_if_not),
        }


def canonical_kind(kind: str) -> str:
    if kind in KINDS:
        return kind
    key = kind.replace("-", "").replace("_", "").replace("+", "").lower()
    if key in ALIASES:
        return ALIASES[key]
    raise ValidationError(f"unknown model kind {kind!r}")


def _floats(x, name: str) -> tuple[float, ...]:
    if x is None:
        return ()
    if isinstance(x, (int, float)):
        x = [x]
    try:
        vals = tuple(float(v) for v in x)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be a list of reals") from exc
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{name} must be finite")
    return vals


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _allowed(params: dict, keys: Iterable[str], kind: str) -> None:
    extra = set(params) - set(keys)
    if extra:
        raise ValidationError(f"{kind}: unexpected parameters {sorted(extra)}")


def make_symbol(kind: str, params: dict | None = None, **kw) -> ModelSymbol:
    """Build and validate a symbol.

    ``params`` (or keyword arguments) use the flat names N, n, alpha, a, b, nu,
    tau, theta, nus, ells.  Scalars are accepted for list-valued entries.
    """
    p = dict(params or {})
    p.update(kw)
    kind = canonical_kind(kind)
    builder = _BUILDERS[kind]
    sym = builder(p)
    _check_geometry(sym)
    return sym


def _get_N(p: dict, kind: str) -> int:
    _require("N" in p and p["N"] is not None, f"{kind}: N is required")
    N = p["N"]
    _require(float(N) == int(N) and int(N) >= 1, f"{kind}: N must be a positive integer")
    return int(N)


def _expand(vals: tuple, length: int, name: str, kind: str) -> tuple:
    if len(vals) == 1 and length > 1:
        vals = vals * length
    _require(len(vals) == length, f"{kind}: {name} must have {length} entries, got {len(vals)}")
    return vals


def _positive_tau(p: dict, kind: str) -> float:
    _require(p.get("tau") is not None, f"{kind}: tau is required")
    tau = float(p["tau"])
    _require(tau > 0 and math.isfinite(tau), f"{kind}: tau must be positive")
    return tau


def _build_loggamma(p: dict) -> ModelSymbol:
    kind = "LogGamma"
    _allowed(p, ("N", "n", "alpha", "a", "delta1", "delta2"), kind)
    N = _get_N(p, kind)
    n = int(p.get("n", N) or N)
    _require(n >= N, f"{kind}: n >= N required (n={n}, N={N})")
    _require("alpha" in p and p["alpha"] is not None, f"{kind}: alpha is required")
    alpha = _expand(_floats(p["alpha"], "alpha"), n, "alpha", kind)
    a = _expand(_floats(p.get("a", 0.0), "a"), N, "a", kind)
    for j, al in enumerate(alpha):
        for k, ak in enumerate(a):
            _require(al - ak > 0, f"{kind}: alpha_j - a_k > 0 violated (alpha_{j+1} - a_{k+1} = {al - ak:g})")
    _require(min(a) >= 0, f"{kind}: zeros must satisfy 0 <= a_k")
    a_max, al_min = max(a), min(alpha)
    d2 = p.get("delta2")
    if d2 is None:
        d2 = 0.9 if n == N else 0.6
        lower = a_max if n > N else max(a_max, sum(alpha[:N]) / (2 * N) + sum(a) / (2 * N))
        if d2 >= al_min or d2 <= lower:
            d2 = 0.5 * (al_min + lower)
    d2 = float(d2)
    d1 = p.get("delta1")
    cap = min(d2, 1.0 - d2)
    if d1 is None:
        d1 = max(1e-3, a_max + 0.05)
        if d1 >= cap:
            d1 = 0.5 * (a_max + cap)
    d1 = float(d1)
    _require(a_max < d1, f"{kind}: circle radius delta1={d1:g} must exceed max a_k={a_max:g}")
    _require(d1 < cap, f"{kind}: delta1 < min(delta2, 1 - delta2) violated (delta1={d1:g}, delta2={d2:g})")
    _require(d2 < al_min, f"{kind}: alpha_j > delta2 violated (delta2={d2:g}, min alpha={al_min:g})")
    if n == N:
        decay = 2 * N * d2 - (sum(alpha) + sum(a))
        _require(decay > 0, f"{kind}: n=N requires sum(alpha_j + a_j - 2 delta2) < 0 (got {-decay:g})")
    else:
        decay = GAUSSIAN_DECAY
    return ModelSymbol(
        kind=kind, N=N, n=n, alpha=alpha, a=a,
        strip=(a_max - 1.0, al_min), domain="RealLine", decay_exponent=decay,
        sigma_center=0.0, sigma_radius=d1, line_abscissa=d2,
        extra={"delta1": d1, "delta2": d2},
    )


def _build_oy(p: dict) -> ModelSymbol:
    kind = "OY"
    _allowed(p, ("N", "a", "tau", "delta1", "delta2"), kind)
    N = _get_N(p, kind)
    a = _expand(_floats(p.get("a", 0.0), "a"), N, "a", kind)
    tau = _positive_tau(p, kind)
    amax_abs = max(abs(x) for x in a)
    d1 = float(p.get("delta1") or (amax_abs + 0.05))
    _require(amax_abs < d1 < 0.5, f"{kind}: |a_i| < delta1 < 1/2 violated (delta1={d1:g})")
    d2 = float(p.get("delta2") or min(2 * d1 + 0.1, 0.5 * (2 * d1 + 1)))
    _require(2 * d1 < d2 < 1, f"{kind}: 2 delta1 < delta2 < 1 violated (delta2={d2:g})")
    return ModelSymbol(
        kind=kind, N=N, a=a, tau=tau,
        strip=(max(a) - 1.0, math.inf), domain="RealLine", decay_exponent=GAUSSIAN_DECAY,
        sigma_center=0.0, sigma_radius=d1, line_abscissa=d2,
        extra={"delta1": d1, "delta2": d2},
    )


def _cluster_geometry(a: tuple, right_limit: float, margin_cap: float) -> tuple[float, float, float]:
    """Circle around a cluster of zeros plus a line abscissa to its right.

    The circle excludes a_k - 1, and the line stays left of ``right_limit``
    while keeping Re(v - u) < 1 when the cluster is narrower than 1.
    """
    lo, hi = min(a), max(a)
    spread = hi - lo
    center, hw = 0.5 * (lo + hi), 0.5 * spread
    room = right_limit - hi
    m = min(margin_cap, room / 3.0)
    if spread < 1:
        m = min(m, 0.45 * (1 - spread))
    radius = hw + m
    step = min(0.2, room - m, 1 - spread - 2 * m) if spread < 1 else min(0.2, room - m)
    c = hi + m + 0.5 * step
    return center, radius, c


def _build_mixed(p: dict) -> ModelSymbol:
    kind = "Mixed"
    _allowed(p, ("N", "n", "alpha", "a", "tau"), kind)
    N = _get_N(p, kind)
    n = int(p.get("n", N) or N)
    _require(n == N, f"{kind}: only n = N is supported (n={n}, N={N})")
    _require("alpha" in p and p["alpha"] is not None, f"{kind}: alpha is required")
    alpha = _expand(_floats(p["alpha"], "alpha"), N, "alpha", kind)
    a = _expand(_floats(p.get("a", 0.0), "a"), N, "a", kind)
    tau = _positive_tau(p, kind)
    for j, al in enumerate(alpha):
        for k, ak in enumerate(a):
            _require(al - ak > 0, f"{kind}: alpha_j - a_k > 0 violated (alpha_{j+1} - a_{k+1} = {al - ak:g})")
    for j in range(N):
        for k in range(j):
            d = a[j] - a[k]
            if d != 0 and abs(d - round(d)) < 1e-9:
                raise IntegerGapError(f"{kind}: a_{k+1} and a_{j+1} differ by the integer {round(d)}")
    _require(max(a) - min(a) < 1, f"{kind}: zeros must lie in a window of width < 1 so that a circle excludes a_k - 1")
    center, radius, c = _cluster_geometry(a, min(alpha), 0.2)
    return ModelSymbol(
        kind=kind, N=N, n=n, alpha=alpha, a=a, tau=tau,
        strip=(max(a) - 1.0, min(alpha)), domain="RealLine", decay_exponent=GAUSSIAN_DECAY,
        sigma_center=center, sigma_radius=radius, line_abscissa=c,
    )


def _build_gue(p: dict) -> ModelSymbol:
    kind = "GUEext"
    _allowed(p, ("N", "a", "tau"), kind)
    N = _get_N(p, kind)
    a = _expand(_floats(p.get("a", 0.0), "a"), N, "a", kind)
    tau = _positive_tau(p, kind)
    spread = max(a) - min(a)
    m = 0.3 if spread >= 1 else min(0.3, 0.3 * (1 - spread))
    center = 0.5 * (max(a) + min(a))
    return ModelSymbol(
        kind=kind, N=N, a=a, tau=tau,
        strip=(-math.inf, math.inf), domain="RealLine", decay_exponent=GAUSSIAN_DECAY,
        sigma_center=center, sigma_radius=0.5 * spread + m, line_abscissa=max(a) + 2 * m,
    )


def _build_glue(p: dict) -> ModelSymbol:
    kind = "GLUEext"
    _allowed(p, ("N", "b", "tau"), kind)
    N = _get_N(p, kind)
    b = _expand(_floats(p.get("b", 0.0), "b"), N, "b", kind)
    tau = _positive_tau(p, kind)
    _require(all(0 <= x < 1 for x in b), f"{kind}: 0 <= b_k < 1 violated")
    pole = 1.0 - max(b)
    return ModelSymbol(
        kind=kind, N=N, a=(0.0,) * N, b=b, tau=tau,
        strip=(-math.inf, pole), domain="RealLine", decay_exponent=GAUSSIAN_DECAY,
        sigma_center=0.0, sigma_radius=0.25 * pole, line_abscissa=0.5 * pole,
    )


def _build_lue(p: dict) -> ModelSymbol:
    kind = "LUEext"
    _allowed(p, ("N", "b", "nu"), kind)
    N = _get_N(p, kind)
    b = _expand(_floats(p.get("b", 0.0), "b"), N, "b", kind)
    nu = float(p.get("nu", 0.0) or 0.0)
    _require(nu >= 0, f"{kind}: nu must be nonnegative")
    _require(all(0 <= x < 1 for x in b), f"{kind}: 0 <= b_k < 1 violated")
    lo, hi = min(b), max(b)
    m = min(0.3, 0.4 * (1 - hi))
    right = hi + m
    return ModelSymbol(
        kind=kind, N=N, a=b, b=b, nu=nu,
        strip=(-math.inf, 1.0), domain="PositiveHalfLine", decay_exponent=nu,
        sigma_center=0.5 * (lo + hi), sigma_radius=0.5 * (hi - lo) + m,
        line_abscissa=0.5 * (right + 1.0),
        line_kind="loop", loop_center=1.0, loop_radius=0.5 * (1.0 - right), loop_orientation=-1,
    )


def _int_zeros(N: int) -> tuple[float, ...]:
    return tuple(float(m) for m in range(1, N + 1))


def _build_ginibre(p: dict) -> ModelSymbol:
    kind = "GinibreProduct"
    _allowed(p, ("N", "nus", "n_factors"), kind)
    N = _get_N(p, kind)
    nf = int(p.get("n_factors") or len(_floats(p.get("nus"), "nus")) or 1)
    nus = _floats(p.get("nus", 0.0), "nus")
    nus = _expand(nus if nus else (0.0,), nf, "nus", kind)
    _require(nf >= 1, f"{kind}: n_factors >= 1 required")
    _require(all(v >= 0 for v in nus), f"{kind}: nu_k >= 0 required")
    lo = -min(nus)
    return ModelSymbol(
        kind=kind, N=N, a=_int_zeros(N), nus=nus,
        strip=(lo, math.inf), domain="ExponentialVariables", decay_exponent=GAUSSIAN_DECAY,
        sigma_center=0.5 * (N + 1), sigma_radius=0.5 * (N - 1) + 0.5, line_abscissa=0.5 * (lo + 0.5),
        extra={"right_abscissa": N + 1.0},
    )


def _build_mb(p: dict) -> ModelSymbol:
    kind = "MuttalibBorodinLUE"
    _allowed(p, ("N", "nu", "theta"), kind)
    N = _get_N(p, kind)
    nu = float(p.get("nu", 0.0) or 0.0)
    theta = float(p.get("theta", 1.0) or 1.0)
    _require(theta > 0, f"{kind}: theta > 0 required")
    _require(nu > -1, f"{kind}: nu > -1 required")
    lo = 1.0 - (nu + 1.0) / theta
    room = min(1.0 - lo, 1.0)
    left = 1.0 - 0.5 * room
    return ModelSymbol(
        kind=kind, N=N, a=_int_zeros(N), nu=nu, theta=theta,
        strip=(lo, math.inf), domain="ExponentialVariables", decay_exponent=GAUSSIAN_DECAY,
        sigma_center=0.5 * (N + 1), sigma_radius=0.5 * (N - 1) + 0.5 * room,
        line_abscissa=0.5 * (max(lo, left - 1.0) + left),
        extra={"right_abscissa": N + 1.0},
    )


def _build_trunc(p: dict) -> ModelSymbol:
    kind = "TruncUnitaryProduct"
    _allowed(p, ("N", "nus", "ells"), kind)
    N = _get_N(p, kind)
    nus = _floats(p.get("nus"), "nus")
    ells = _floats(p.get("ells"), "ells")
    _require(len(nus) >= 1 and len(nus) == len(ells), f"{kind}: nus and ells must be non-empty and of equal length")
    poles = []
    total = 0
    for nu_k, l_k in zip(nus, ells):
        mu = l_k - N - nu_k
        _require(nu_k >= 0, f"{kind}: nu_k >= 0 required")
        _require(mu >= 1 and float(mu) == int(mu), f"{kind}: ell_k - N - nu_k must be a positive integer (got {mu:g})")
        total += int(mu)
        poles.extend(-nu_k - j for j in range(int(mu)))
    _require(total >= N, f"{kind}: sum of ell_k - N - nu_k must be at least N (got {total})")
    pmin, pmax = min(poles), max(poles)
    return ModelSymbol(
        kind=kind, N=N, a=_int_zeros(N), nus=nus, ells=ells,
        strip=(pmax, math.inf), domain="ExponentialVariables", decay_exponent=float(total - N),
        sigma_center=0.5 * (N + 1), sigma_radius=0.5 * (N - 1) + 0.5 * min(1.0, 1.0 - pmax),
        line_abscissa=N + 1.0,
        line_kind="loop", loop_center=0.5 * (pmin + pmax),
        loop_radius=0.5 * (pmax - pmin) + 0.25, loop_orientation=1,
        extra={"poles": tuple(poles)},
    )


_BUILDERS = {
    "LogGamma": _build_loggamma,
    "OY": _build_oy,
    "Mixed": _build_mixed,
    "GUEext": _build_gue,
    "GLUEext": _build_glue,
    "LUEext": _build_lue,
    "GinibreProduct": _build_ginibre,
    "MuttalibBorodinLUE": _build_mb,
    "TruncUnitaryProduct": _build_trunc,
}


def _check_geometry(sym: ModelSymbol) -> None:
    """Contour admissibility: exactly the N zeros inside the circle, line to its right."""
    c0, r = sym.sigma_center, sym.sigma_radius
    _require(r > 0, "sigma contour radius must be positive")
    for ak in sym.a:
        _require(abs(ak - c0) < r, f"zero a={ak:g} is not enclosed by the sigma contour")
    _require(sym.strip[0] < c0 - r, "sigma contour leaves the analytic strip on the left")
    for z in _other_zeros_near(sym, c0, r):
        raise ValidationError(f"W has an additional zero at {z:g} inside the sigma contour")
    if sym.line_kind == "vertical":
        c = sym.line_abscissa
        _require(sym.strip[0] < c < sym.strip[1], f"line abscissa {c:g} outside the strip {sym.strip}")
        if sym.domain == "ExponentialVariables":
            # the v = u residue integrates to zero around the circle, so either side works
            _require(c > c0 + r or c < c0 - r, f"line abscissa {c:g} intersects the sigma contour")
        else:
            _require(c > c0 + r, f"line abscissa {c:g} is not to the right of the sigma contour")
    else:
        gap = abs(sym.loop_center - c0) - sym.loop_radius - r
        _require(gap > 0, "loop contour intersects the sigma contour")


def _other_zeros_near(sym: ModelSymbol, c0: float, r: float) -> list[float]:
    # zeros of W other than a_1..a_N that a circle could pick up
    if sym.kind in ("LogGamma", "OY", "Mixed"):
        cands = [ak - j for ak in sym.a for j in range(1, 4)]
        return [z for z in cands if abs(z - c0) <= r]
    return []


def log_symbol(sym: ModelSymbol, z):
    """log W_N(z) as a sum of log-gamma, log and polynomial terms."""
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    kind = sym.kind
    a = np.asarray(sym.a, dtype=float)
    for ak in a:
        if np.any(np.abs(z - ak) < ZERO_TOL):
            raise ZeroError(f"log_symbol: z within 1e-12 of the zero a={ak:g}")
    try:
        if kind == "LogGamma":
            out = sum(log_gamma(al - z) for al in sym.alpha) - sum(log_gamma(z - ak) for ak in a)
        elif kind == "OY":
            out = 0.5 * sym.tau * z * z - sum(log_gamma(z - ak) for ak in a)
        elif kind == "Mixed":
            out = (0.5 * sym.tau * z * z + sum(log_gamma(al - z) for al in sym.alpha)
                   - sum(log_gamma(z - ak) for ak in a))
        elif kind == "GUEext":
            out = 0.5 * sym.tau * z * z + sum(np.log(z - ak) for ak in a)
        elif kind == "LUEext":
            if np.any(np.abs(z - 1.0) < ZERO_TOL):
                raise PoleError("log_symbol: pole at z=1")
            out = sum(np.log(z - bk) for bk in sym.b) - (sym.N + sym.nu) * np.log(z - 1.0)
        elif kind == "GLUEext":
            for bk in sym.b:
                if np.any(np.abs(z - 1.0 + bk) < ZERO_TOL):
                    raise PoleError(f"log_symbol: pole at z={1 - bk:g}")
            out = (sym.N * np.log(z) + 0.5 * sym.tau * z * z
                   - sum(np.log(z - 1.0 + bk) for bk in sym.b))
        elif kind == "GinibreProduct":
            out = sum(np.log(z - ak) for ak in a) + sum(log_gamma(z + v) for v in sym.nus)
        elif kind == "MuttalibBorodinLUE":
            th = sym.theta
            out = sum(np.log(z - ak) for ak in a) + log_gamma(sym.nu + 1.0 - th + th * z)
        elif kind == "TruncUnitaryProduct":
            poles = np.asarray(sym.extra["poles"])
            for q in poles:
                if np.any(np.abs(z - q) < ZERO_TOL):
                    raise PoleError(f"log_symbol: pole at z={q:g}")
            out = sum(np.log(z - ak) for ak in a) - sum(np.log(z - q) for q in poles)
        else:  # pragma: no cover - guarded by canonical_kind
            raise ValidationError(f"unknown kind {kind}")
    except PoleError as exc:
        if kind in ("LogGamma", "OY", "Mixed") and "nonpositive" in str(exc):
            # either Gamma(alpha - z) (pole of W) or Gamma(z - a) (zero of W)
            zz = np.atleast_1d(z)
            for ak in a:
                d = zz - ak
                if np.any((np.abs(d - np.round(d.real)) < ZERO_TOL) & (np.round(d.real) <= 0)):
                    raise ZeroError("log_symbol: z at a zero a_k - m of W") from exc
        raise
    out = np.asarray(out, dtype=complex)
    if scalar:
        return complex(out)
    return out


def symbol_value(sym: ModelSymbol, z):
    return np.exp(log_symbol(sym, z))


def symbol_derivative_at_zero(sym: ModelSymbol, m: int, h: float | None = None) -> float:
    """W'(a_m) by a 4-point central difference of exp(log_symbol).

    The default step is 1e-5 times the width of the strip (capped at 1e-5 for
    unbounded strips).
    """
    lo, hi = sym.strip
    width = (hi - lo) if math.isfinite(hi - lo) else 1.0
    if h is None:
        h = 1e-5 * min(width, 1.0)
    x0 = sym.a[m]
    pts = np.array([x0 - 2 * h, x0 - h, x0 + h, x0 + 2 * h], dtype=complex)
    f = symbol_value(sym, pts)
    d = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    return float(d.real)


def sigma_decay_rate(sigma) -> float:
    """Exponential decay rate of sigma at -infinity (inf if it vanishes there)."""
    kind = getattr(sigma, "kind", None)
    if kind == "fermi":
        return 1.0
    if kind in ("indicator", "zero"):
        return math.inf
    return float(getattr(sigma, "decay_minus", 0.0))


def representation_flags(sym: ModelSymbol, sigma) -> RepresentationFlags:
    """Which of the four determinant representations apply to (sym, sigma)."""
    reasons: dict[str, str] = {}
    kind = getattr(sigma, "kind", "custom")

    matrix_ok = sym.is_distinct or sym.is_confluent or kind == "zero"
    if not matrix_ok:
        reasons["matrix"] = "partially confluent zeros"
    L_ok = True

    spread = sym.a_max - sym.a_min
    decay_ok = sym.decay_exponent > 1
    if sym.kind == "LogGamma" and sym.n == sym.N and not decay_ok:
        decay_reason = "n=N decay condition fails"
    else:
        decay_reason = "W decay exponent <= 1"

    H_ok = True
    if sym.domain == "ExponentialVariables":
        H_ok, reasons["H"] = False, "exponential-variable symbols use the L and matrix forms"
    elif sym.line_kind != "vertical":
        H_ok, reasons["H"] = False, "v-contour is a loop, not a vertical line"
    elif not decay_ok:
        H_ok, reasons["H"] = False, decay_reason
    elif not sigma_decay_rate(sigma) > spread:
        H_ok, reasons["H"] = False, "sigma does not decay fast enough at -infinity"

    K_ok = True
    if kind != "fermi":
        K_ok, reasons["K"] = False, "K form needs a Fermi factor"
    elif sym.domain == "ExponentialVariables":
        K_ok, reasons["K"] = False, "exponential-variable symbols use the L and matrix forms"
    elif sym.line_kind != "vertical":
        K_ok, reasons["K"] = False, "v-contour is a loop, not a vertical line"
    elif not decay_ok:
        K_ok, reasons["K"] = False, decay_reason
    elif not spread < 1:
        K_ok, reasons["K"] = False, "a_max - a_min >= 1"
    else:
        lo = sym.line_abscissa - (sym.sigma_center + sym.sigma_radius)
        hi = sym.line_abscissa - (sym.sigma_center - sym.sigma_radius)
        if not (0 < lo and hi < 1):
            K_ok, reasons["K"] = False, "contours violate 0 < Re(v - u) < 1"
    return RepresentationFlags(matrix_ok, L_ok, H_ok, K_ok, reasons)
