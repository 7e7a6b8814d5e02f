"""Command-line interface ``biortho``.

Subcommands: laplace, gap, check, mc-compare, zerotemp, kernel, logderiv.
Settings come from built-in defaults, then an optional flat key=value config
file (``--config``), then command-line flags, later sources winning.  Every
output record carries the package version and the resolved configuration.

Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys

import numpy as np

from . import __version__
from .errors import BiorthoError, NumericalError, ValidationError
from .fredholm import (MATRIX_MODELS, POLYMERS, deformed_density, gap_probability, laplace_transform,
                       log_derivative, mu_sigma, zero_temperature_sweep)
from .kernels import (biorthogonality_matrix, bulk_points, eval_L, make_context, phi_matrix, psi_matrix,
                      reproducing_residual, trace_integral)
from .models import canonical_kind, make_symbol
from .samplers import mc_gap, mc_laplace
from .sigma import SigmaSpec

COMMANDS = ("laplace", "gap", "check", "mc-compare", "zerotemp", "kernel", "logderiv")
MODEL_KEYS = ("n", "N", "alpha", "a", "b", "nu", "tau", "theta", "nus", "ells", "n_factors", "delta1", "delta2")
LIST_KEYS = ("alpha", "a", "b", "nus", "ells", "t", "T_list", "x", "xp")
INT_KEYS = ("n", "N", "n_factors", "samples", "seed", "steps", "nodes", "threads")
FLOAT_KEYS = ("nu", "tau", "theta", "tol", "threshold", "delta1", "delta2")

DEFAULTS = {
    "model": None,
    "t": [0.0],
    "T_list": [0.5, 0.2, 0.1, 0.05],
    "sigma": "fermi",
    "samples": 100000,
    "seed": 0,
    "steps": None,
    "tol": 1e-12,
    "nodes": None,
    "out": None,
    "format": "ndjson",
    "threads": None,
    "threshold": 5e-2,
    "x": None,
    "xp": None,
    "functions": "L",
    "refine": True,
}
CONFIG_KEYS = set(DEFAULTS) | set(MODEL_KEYS)

# tolerances of the check subcommand
CHECK_TOL = {"biorthogonality": 1e-8, "trace": 1e-6, "reproducing": 1e-6, "consensus": 1e-6,
             "log_derivative": 1e-4}
FD_STEP = 1e-3


# ---------------------------------------------------------------- configuration

def _split(values) -> list[str]:
    if values is None:
        return []
    if isinstance(values, str):
        values = [values]
    out = []
    for v in values:
        out.extend(p for p in re.split(r"[,\s]+", str(v).strip()) if p)
    return out


def _expand_range(token: str) -> list[float]:
    """'lo:hi:n' -> n equispaced values; a plain number -> [number]."""
    if ":" in token:
        parts = token.split(":")
        if len(parts) != 3:
            raise ValidationError(f"range {token!r} must be lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValidationError(f"range {token!r} needs n >= 1")
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(token)]


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in LIST_KEYS:
            out = []
            for tok in _split(value):
                out.extend(_expand_range(tok) if key in ("x", "xp") else [float(tok)])
            return out
        if key in INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in FLOAT_KEYS:
            return float(value)
        if key == "refine":
            if isinstance(value, bool):
                return value
            s = str(value).strip().lower()
            if s not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return s in ("true", "1", "yes")
    except ValueError:
        raise ValidationError(f"invalid value for {key}: {value!r}") from None
    return str(value)


def read_config(path: str) -> dict:
    """Flat key=value file; [section] headers and # comments are ignored."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    cfg = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{no}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ValidationError(f"{path}:{no}: unknown key {key!r}")
        cfg[key] = _coerce(key, val)
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in DEFAULTS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = _coerce(key, val)
    cfg["command"] = args.command
    if cfg.get("model") is None:
        raise ValidationError("--model is required")
    cfg["model"] = canonical_kind(cfg["model"])
    return cfg


def model_params(cfg: dict) -> dict:
    return {k: cfg[k] for k in MODEL_KEYS if cfg.get(k) is not None}


def numeric_kwargs(cfg: dict) -> dict:
    kw = {"tol": cfg["tol"]}
    if cfg.get("nodes"):
        kw["circle_nodes"] = cfg["nodes"]
    return kw


def workers(cfg: dict) -> int:
    if cfg.get("threads"):
        return max(1, int(cfg["threads"]))
    env = os.environ.get("BIORTHO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("BIORTHO_THREADS must be an integer") from None
    return os.cpu_count() or 1


def sigma_base(cfg: dict) -> SigmaSpec:
    kind = cfg["sigma"]
    if kind == "fermi":
        return SigmaSpec.fermi(0.0)
    if kind == "indicator":
        return SigmaSpec.indicator(0.0)
    if kind == "zero":
        return SigmaSpec.zero()
    raise ValidationError(f"unknown sigma {kind!r}")


# ---------------------------------------------------------------- output

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


class Writer:
    """Collects records; the config is attached to each one on output."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.records: list[dict] = []

    def add(self, rec: dict) -> None:
        self.records.append(rec)

    def _config(self) -> dict:
        # thread count and output path do not affect results and are left out
        return {k: v for k, v in sorted(self.cfg.items()) if k not in ("threads", "out")}

    def render(self) -> str:
        cfg = _plain(self._config())
        rows = [dict(_plain(r), version=__version__, config=cfg) for r in self.records]
        if self.cfg["format"] == "ndjson":
            return "".join(json.dumps(r, allow_nan=True) + "\n" for r in rows)
        if self.cfg["format"] != "csv":
            raise ValidationError("--format must be ndjson or csv")
        fields: list[str] = []
        for r in rows:
            for k in r:
                if k not in fields:
                    fields.append(k)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
        return buf.getvalue()

    def flush(self) -> None:
        text = self.render()
        if self.cfg.get("out"):
            with open(self.cfg["out"], "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_laplace(cfg: dict, out: Writer) -> int:
    params = model_params(cfg)
    for t in cfg["t"]:
        rep = laplace_transform(cfg["model"], params, t, refine=cfg["refine"], **numeric_kwargs(cfg))
        rec = {"t": t}
        rec.update({f"{k}_value": v for k, v in rep.values().items()})
        rec.update(consensus=rep.consensus, refinement_error=rep.refinement_error,
                   flags=rep.flags.as_dict(), reasons=rep.excluded)
        out.add(rec)
    return 0


def cmd_gap(cfg: dict, out: Writer) -> int:
    params = model_params(cfg)
    for s in cfg["t"]:
        out.add({"s": s, "gap_probability": gap_probability(cfg["model"], params, s, **numeric_kwargs(cfg))})
    return 0


def _check_row(name: str, fn) -> dict:
    tol = CHECK_TOL[name]
    try:
        residual = float(fn())
    except ValidationError as exc:
        return {"check": name, "status": "skipped", "reason": f"{type(exc).__name__}: {exc}", "tolerance": tol}
    except NumericalError as exc:
        return {"check": name, "status": "fail", "reason": f"{type(exc).__name__}: {exc}", "tolerance": tol}
    ok = math.isfinite(residual) and residual < tol
    return {"check": name, "status": "pass" if ok else "fail", "residual": residual, "tolerance": tol}


def _fd_log_mu(ctx, sigma: SigmaSpec, t: float, h: float = FD_STEP) -> float:
    def logmu(s):
        return math.log(mu_sigma(ctx, sigma.shifted(s), ("matrix", "L"), refine=False).value)
    return (logmu(t + h) - logmu(t - h)) / (2 * h)


def cmd_check(cfg: dict, out: Writer) -> int:
    sym = make_symbol(cfg["model"], model_params(cfg))
    ctx = make_context(sym, **numeric_kwargs(cfg))
    t0 = cfg["t"][0]

    def biorth():
        return np.max(np.abs(biorthogonality_matrix(ctx) - np.eye(sym.N)))

    def trace():
        return abs(trace_integral(ctx) - sym.N) / sym.N

    def reproducing():
        return reproducing_residual(ctx, bulk_points(ctx))

    def consensus():
        rep = mu_sigma(ctx, SigmaSpec.fermi(t0))
        if len(rep.values()) < 2:
            raise ValidationError("fewer than two representations apply")
        return rep.consensus

    def logder():
        base = SigmaSpec.fermi(0.0)
        ident = log_derivative(ctx, base, t0)
        return abs(_fd_log_mu(ctx, base, t0) - ident) / max(abs(ident), 1e-300)

    rows = [
        _check_row("biorthogonality", biorth),
        _check_row("trace", trace),
        _check_row("reproducing", reproducing),
        _check_row("consensus", consensus),
        _check_row("log_derivative", logder),
    ]
    for r in rows:
        r["confluent"] = sym.is_confluent
        out.add(r)
    return 1 if any(r["status"] == "fail" for r in rows) else 0


def cmd_mc_compare(cfg: dict, out: Writer) -> int:
    kind, params = cfg["model"], model_params(cfg)
    n, seed = cfg["samples"], cfg["seed"]
    if n is None or n < 1000:
        raise ValidationError("--samples must be at least 1000")
    ts = cfg["t"]
    if kind in POLYMERS:
        mcs = mc_laplace(kind, params, ts, n, seed, n_steps=cfg["steps"], workers=workers(cfg))
        exact = [laplace_transform(kind, params, t, representations=("matrix", "L", "K"), refine=False,
                                   **numeric_kwargs(cfg)).value for t in ts]
    elif kind in MATRIX_MODELS:
        mcs = mc_gap(kind, params, ts, n, seed, workers=workers(cfg))
        exact = [gap_probability(kind, params, t, **numeric_kwargs(cfg)) for t in ts]
    else:
        raise ValidationError(f"no Monte Carlo oracle for {kind}")
    ok = True
    for t, e, f in zip(ts, mcs, exact):
        z = e.z_score(f)
        ok &= abs(z) <= 3.0
        out.add({"t": t, "fredholm": f, "mc_mean": e.mean, "mc_stderr": e.stderr, "z_score": z,
                 "n_samples": e.n_samples, "seed": e.seed})
    return 0 if ok else 1


def cmd_zerotemp(cfg: dict, out: Writer) -> int:
    rows = zero_temperature_sweep(cfg["model"], model_params(cfg), cfg["t"][0], cfg["T_list"])
    for r in rows:
        out.add(dict(r, t=cfg["t"][0]))
    d = [r["difference"] for r in rows]
    ok = all(b < a for a, b in zip(d, d[1:])) and d[-1] < cfg["threshold"]
    return 0 if ok else 1


def cmd_kernel(cfg: dict, out: Writer) -> int:
    sym = make_symbol(cfg["model"], model_params(cfg))
    if cfg["x"] is None:
        raise ValidationError("kernel needs --x (values or lo:hi:n)")
    xs = np.asarray(cfg["x"])
    xps = np.asarray(cfg["xp"] if cfg["xp"] is not None else cfg["x"])
    ctx = make_context(sym, x_max=float(max(np.max(np.abs(xs)), np.max(np.abs(xps)))), **numeric_kwargs(cfg))
    funcs = [f.strip() for f in _split(cfg["functions"])]
    unknown = set(funcs) - {"L", "psi", "phi", "kappa"}
    if unknown:
        raise ValidationError(f"unknown functions {sorted(unknown)}; choose from L, psi, phi, kappa")
    if "L" in funcs:
        L = eval_L(ctx, xs, xps)
        for i, x in enumerate(xs):
            for j, xp in enumerate(xps):
                out.add({"function": "L", "x": x, "xp": xp, "value": L[i, j]})
    for name, fn in (("psi", psi_matrix), ("phi", phi_matrix)):
        if name in funcs:
            vals = fn(ctx, xs)
            for i, x in enumerate(xs):
                for m in range(sym.N):
                    out.add({"function": name, "m": m + 1, "x": x, "value": vals[i, m]})
    if "kappa" in funcs:
        base = sigma_base(cfg)
        for t in cfg["t"]:
            vals = deformed_density(ctx, base, t, xs)
            for x, v in zip(xs, np.atleast_1d(vals)):
                out.add({"function": "kappa", "t": t, "sigma": cfg["sigma"], "x": x, "value": v})
    return 0


def cmd_logderiv(cfg: dict, out: Writer) -> int:
    sym = make_symbol(cfg["model"], model_params(cfg))
    ctx = make_context(sym, **numeric_kwargs(cfg))
    base = sigma_base(cfg)
    for t in cfg["t"]:
        ident = log_derivative(ctx, base, t)
        fd = _fd_log_mu(ctx, base, t) if base.kind != "zero" else 0.0
        rel = abs(fd - ident) / abs(ident) if ident else abs(fd)
        out.add({"t": t, "sigma": cfg["sigma"], "log_derivative": ident, "finite_difference": fd,
                 "relative_difference": rel})
    return 0


HANDLERS = {
    "laplace": cmd_laplace, "gap": cmd_gap, "check": cmd_check, "mc-compare": cmd_mc_compare,
    "zerotemp": cmd_zerotemp, "kernel": cmd_kernel, "logderiv": cmd_logderiv,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="biortho",
        description="Kernels, Fredholm determinants and Monte Carlo oracles for biorthogonal ensembles.",
        epilog="Exit codes: 0 ok, 1 check failed, 2 invalid input, 3 numerical failure.",
    )
    p.add_argument("--version", action="version", version=f"biortho {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "laplace": "polymer Laplace transform E[exp(-e^t Z)] by every applicable representation",
        "gap": "largest-eigenvalue distribution P(max <= s) of a matrix model (s given by --t)",
        "check": "invariant suite: biorthogonality, trace, reproducing, consensus, log-derivative",
        "mc-compare": "Monte Carlo against the Fredholm value; fails when some |z| > 3",
        "zerotemp": "zero-temperature sweep; fails unless differences decrease below --threshold",
        "kernel": "tables of L, psi_m, phi_m or the deformed density on a grid",
        "logderiv": "log-derivative identity against central finite differences",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name], description=helps[name])
        _add_common(sp)
    return p


def _add_common(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("model")
    g.add_argument("--model", help="LogGamma, OY, Mixed, GUEext, LUEext, GLUEext, GinibreProduct, "
                                    "MuttalibBorodinLUE or TruncUnitaryProduct (case-insensitive aliases)")
    g.add_argument("--n", help="LogGamma lattice length n (default N)")
    g.add_argument("--N", help="number of particles / polymer width")
    g.add_argument("--alpha", nargs="+", help="alpha parameters (comma or space separated)")
    g.add_argument("--a", nargs="+", help="zeros / drifts a_k")
    g.add_argument("--b", nargs="+", help="LUE+ / GLUE+ source parameters b_k")
    g.add_argument("--nu", help="LUE+ or Muttalib-Borodin nu")
    g.add_argument("--tau", help="time parameter tau")
    g.add_argument("--theta", help="Muttalib-Borodin theta")
    g.add_argument("--nus", nargs="+", help="product-ensemble nu_k")
    g.add_argument("--ells", nargs="+", help="truncated-unitary ell_k")
    g.add_argument("--n-factors", dest="n_factors", help="number of Ginibre factors")
    g.add_argument("--delta1", help="LogGamma/OY: Sigma circle right edge (default automatic)")
    g.add_argument("--delta2", help="LogGamma/OY: abscissa of the vertical line (default automatic)")
    s = sp.add_argument_group("evaluation")
    s.add_argument("--t", nargs="+", help="t values (gap: thresholds s); default 0")
    s.add_argument("--T-list", dest="T_list", nargs="+", help="temperatures, strictly decreasing; "
                                                              "default 0.5 0.2 0.1 0.05")
    s.add_argument("--sigma", choices=("fermi", "indicator", "zero"), help="statistic; default fermi")
    s.add_argument("--x", nargs="+", help="kernel grid: values or lo:hi:n")
    s.add_argument("--xp", nargs="+", help="second kernel grid (default: --x)")
    s.add_argument("--functions", help="kernel outputs among L,psi,phi,kappa; default L")
    s.add_argument("--threshold", help="zerotemp final-gap threshold; default 0.05")
    s.add_argument("--no-refine", dest="refine", action="store_const", const=False,
                   help="skip the refinement pass that estimates errors")
    n = sp.add_argument_group("numerics and Monte Carlo")
    n.add_argument("--tol", help="contour truncation tolerance; default 1e-12")
    n.add_argument("--nodes", help="Sigma circle nodes; default chosen from the zeros")
    n.add_argument("--samples", help="Monte Carlo samples; default 100000, minimum 1000")
    n.add_argument("--seed", help="Monte Carlo seed; default 0")
    n.add_argument("--steps", help="Brownian time steps; default max(500, 2000 tau)")
    n.add_argument("--threads", help="worker threads; default BIORTHO_THREADS or all cores")
    o = sp.add_argument_group("output")
    o.add_argument("--out", help="output file; default stdout")
    o.add_argument("--format", choices=("ndjson", "csv"), help="default ndjson")
    o.add_argument("--config", help="flat key = value file; flags override it")


_NEG_RANGE = re.compile(r"^-[\d.]+(?:[eE][-+]?\d+)?:")


def _protect_ranges(argv: list[str]) -> list[str]:
    # argparse takes "-1:1:5" for an option; a leading space keeps it a value
    return [" " + a if _NEG_RANGE.match(a) else a for a in argv]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_protect_ranges(sys.argv[1:] if argv is None else list(argv)))
    try:
        cfg = resolve(args)
        out = Writer(cfg)
        code = HANDLERS[cfg["command"]](cfg, out)
        out.flush()
        return code
    except ValidationError as exc:
        print(f"biortho: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, BiorthoError, FloatingPointError) as exc:
        print(f"biortho: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
