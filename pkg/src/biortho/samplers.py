"""Monte Carlo oracles: polymer partition functions and matrix-model eigenvalues.

Every estimator splits its samples into fixed-size blocks; block b draws
from its own Philox stream keyed by (seed, b), so results are identical for
any number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .models import canonical_kind

BLOCK = 4096


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int

    def z_score(self, value: float) -> float:
        if self.stderr == 0:
            return 0.0 if value == self.mean else math.copysign(math.inf, self.mean - value)
        return (self.mean - value) / self.stderr

    def as_dict(self) -> dict:
        return {"mc_mean": self.mean, "mc_stderr": self.stderr, "n_samples": self.n_samples, "seed": self.seed}


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based substream for one block of samples."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def default_workers() -> int:
    env = os.environ.get("BIORTHO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("BIORTHO_THREADS must be a positive integer") from None
    return os.cpu_count() or 1


def _run_blocks(fn, n_samples: int, seed: int, workers: int | None = None) -> np.ndarray:
    """Concatenate fn(rng, size) over the blocks, in block order."""
    if n_samples < 1:
        raise ValidationError("n_samples must be positive")
    sizes = [BLOCK] * (n_samples // BLOCK)
    if n_samples % BLOCK:
        sizes.append(n_samples % BLOCK)
    jobs = [(b, s) for b, s in enumerate(sizes)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        parts = [fn(block_rng(seed, b), s) for b, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(block_rng(seed, job[0]), job[1]), jobs))
    return np.concatenate(parts, axis=0)


def _estimate(values: np.ndarray, seed: int) -> McEstimate:
    n = len(values)
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return McEstimate(mean, sd / math.sqrt(n), n, int(seed))


# ---------------------------------------------------------------- gamma variates

def log_gamma_variate(shape, rng: np.random.Generator, size=None) -> np.ndarray:
    """log G with G ~ Gamma(shape, 1); accurate for small shapes.

    For shape < 1 uses G = G' U^{1/shape} with G' ~ Gamma(shape + 1), which
    keeps log G finite when G itself would underflow.
    """
    shape = np.asarray(shape, dtype=float)
    if np.any(shape <= 0):
        raise ValidationError("gamma shape must be positive")
    small = shape < 1
    boosted = np.where(small, shape + 1.0, shape)
    g = rng.standard_gamma(boosted, size=size)
    out = np.log(g)
    if np.any(small):
        u = rng.random(size=np.shape(g))
        out = out + np.where(small, np.log1p(-u) / np.where(small, shape, 1.0), 0.0)
    return out


def inverse_gamma(shape, rng: np.random.Generator, size=None) -> np.ndarray:
    """Inverse-gamma variates 1/G, G ~ Gamma(shape, 1)."""
    return np.exp(-log_gamma_variate(shape, rng, size))


# ---------------------------------------------------------------- polymers

def _log_loggamma_lattice(alpha, a, rng, size) -> np.ndarray:
    """log Z(j, k) for all lattice points; shape (size, n, N).

    d_{j,k} ~ InvGamma(alpha_j - a_k) and Z(j, k) = d_{j,k} (Z(j-1, k) + Z(j, k-1)).
    """
    alpha = np.asarray(alpha, dtype=float)
    a = np.asarray(a, dtype=float)
    shapes = alpha[:, None] - a[None, :]
    if np.any(shapes <= 0):
        raise ValidationError("alpha_j - a_k > 0 required")
    n, N = shapes.shape
    logd = -log_gamma_variate(np.broadcast_to(shapes, (size, n, N)), rng, size=(size, n, N))
    logZ = np.empty_like(logd)
    for j in range(n):
        for k in range(N):
            if j == 0 and k == 0:
                prev = np.zeros(size)
            elif j == 0:
                prev = logZ[:, j, k - 1]
            elif k == 0:
                prev = logZ[:, j - 1, k]
            else:
                prev = np.logaddexp(logZ[:, j - 1, k], logZ[:, j, k - 1])
            logZ[:, j, k] = logd[:, j, k] + prev
    return logZ


def sample_loggamma_Z(n: int, N: int, alpha, a, rng: np.random.Generator, size: int | None = None,
                      log: bool = False):
    """Log Gamma polymer partition function on the n x N lattice."""
    alpha, a = _params_list(alpha, n, "alpha"), _params_list(a, N, "a")
    m = 1 if size is None else int(size)
    logZ = _log_loggamma_lattice(alpha, a, rng, m)[:, -1, -1]
    out = logZ if log else np.exp(logZ)
    return float(out[0]) if size is None else out


def _brownian_paths(N: int, a, tau: float, n_steps: int, rng, size: int) -> np.ndarray:
    """B_k(s_j) on the grid s_j = j tau / n_steps with drift a_k; shape (size, N, n_steps + 1)."""
    dt = tau / n_steps
    inc = rng.standard_normal((size, N, n_steps)) * math.sqrt(dt) + np.asarray(a)[None, :, None] * dt
    B = np.zeros((size, N, n_steps + 1))
    np.cumsum(inc, axis=2, out=B[:, :, 1:])
    return B


def _oy_chain(B: np.ndarray, dt: float, entry: np.ndarray | None = None) -> np.ndarray:
    """log of the semi-discrete chain F_N(tau).

    F_1(s) = c_1 e^{B_1(s)} and F_k(s) = e^{B_k(s)} [c_k + int_0^s F_{k-1} e^{-B_k}],
    with entry weights c_k (default c_1 = 1, c_k = 0 otherwise).  The running
    integral uses the trapezoid rule; values are kept relative to a per-path
    shift so nothing overflows.
    """
    size, N, _ = B.shape
    if entry is None:
        entry = np.zeros((size, N))
        entry[:, 0] = 1.0
    # log F_k(s) = B_k(s) + log G_k(s), G_k(s) = c_k + int_0^s F_{k-1} e^{-B_k}
    logG = np.log(entry[:, 0])[:, None] + np.zeros_like(B[:, 0, :])
    logF = B[:, 0, :] + logG
    for k in range(1, N):
        g = logF - B[:, k, :]  # log of F_{k-1} e^{-B_k}
        shift = g.max(axis=1, keepdims=True)
        e = np.exp(g - shift)
        cum = np.zeros_like(e)
        np.cumsum(0.5 * (e[:, 1:] + e[:, :-1]) * dt, axis=1, out=cum[:, 1:])
        with np.errstate(divide="ignore"):
            logG = np.logaddexp(np.log(entry[:, k])[:, None], np.log(cum) + shift)
        logF = B[:, k, :] + logG
    return logF[:, -1]


def default_steps(tau: float) -> int:
    return max(500, int(math.ceil(2000 * tau)))


def sample_oy_Z(N: int, a, tau: float, n_steps: int, rng: np.random.Generator, size: int | None = None,
                log: bool = False):
    """O'Connell-Yor partition function by the O(N n_steps) dynamic program."""
    a = _params_list(a, N, "a")
    if not tau > 0:
        raise ValidationError("tau > 0 required")
    if n_steps < 100:
        raise ValidationError("n_steps >= 100 required")
    m = 1 if size is None else int(size)
    B = _brownian_paths(N, a, tau, n_steps, rng, m)
    logZ = _oy_chain(B, tau / n_steps)
    out = logZ if log else np.exp(logZ)
    return float(out[0]) if size is None else out


def sample_mixed_Z(N: int, alpha, a, tau: float, n_steps: int, rng: np.random.Generator,
                   size: int | None = None, reading: str = "path", log: bool = False):
    """Mixed polymer partition function from one shared environment.

    The lattice part uses columns alpha_1..alpha_N and rows a_1..a_k.
    reading "path": the path leaves the lattice at (N, k) and continues on
    Brownian motions k..N, i.e. sum_k Z^LG(N, k) Z^OY(a_k..a_N).
    reading "index": sum_k Z^LG(N, k) Z^OY(a_{k+1}..a_N) with Z^OY of zero
    motions equal to 1.
    """
    alpha, a = _params_list(alpha, N, "alpha"), _params_list(a, N, "a")
    if not tau > 0:
        raise ValidationError("tau > 0 required")
    if n_steps < 100:
        raise ValidationError("n_steps >= 100 required")
    if reading not in ("path", "index"):
        raise ValidationError("reading must be 'path' or 'index'")
    m = 1 if size is None else int(size)
    lattice = _log_loggamma_lattice(alpha, a, rng, m)  # (m, N columns, N rows)
    logZlg = lattice[:, -1, :]  # Z^LG(N, k), k = 1..N
    B = _brownian_paths(N, a, tau, n_steps, rng, m)
    shift = logZlg.max(axis=1, keepdims=True)
    entry = np.exp(logZlg - shift)
    if reading == "path":
        logZ = _oy_chain(B, tau / n_steps, entry) + shift[:, 0]
    else:
        if N == 1:
            logZ = logZlg[:, 0]
        else:
            # Z^LG(N, k) enters motion k + 1 at time 0; the k = N term has no motions
            ent = np.zeros_like(entry)
            ent[:, 1:] = entry[:, :-1]
            chain = _oy_chain(B[:, 1:, :], tau / n_steps, ent[:, 1:]) if N > 1 else None
            logZ = np.logaddexp(chain, np.log(entry[:, -1])) + shift[:, 0]
    out = logZ if log else np.exp(logZ)
    return float(out[0]) if size is None else out


def _params_list(x, length: int, name: str) -> list[float]:
    vals = [float(v) for v in (x if np.ndim(x) else [x])]
    if len(vals) == 1 and length > 1:
        vals = vals * length
    if len(vals) != length:
        raise ValidationError(f"{name} needs {length} values, got {len(vals)}")
    return vals


def sample_log_Z(model: str, params: dict, n_samples: int, seed: int, n_steps: int | None = None,
                 reading: str = "path", workers: int | None = None) -> np.ndarray:
    """log Z for n_samples independent polymers."""
    kind = canonical_kind(model)
    p = dict(params)
    N = int(p["N"])
    if kind == "LogGamma":
        n = int(p.get("n", N) or N)
        alpha = _params_list(p["alpha"], n, "alpha")
        a = _params_list(p.get("a", 0.0), N, "a")
        fn = lambda rng, m: sample_loggamma_Z(n, N, alpha, a, rng, m, log=True)
    elif kind == "OY":
        a = _params_list(p.get("a", 0.0), N, "a")
        tau = float(p["tau"])
        steps = n_steps or default_steps(tau)
        fn = lambda rng, m: sample_oy_Z(N, a, tau, steps, rng, m, log=True)
    elif kind == "Mixed":
        alpha = _params_list(p["alpha"], N, "alpha")
        a = _params_list(p.get("a", 0.0), N, "a")
        tau = float(p["tau"])
        steps = n_steps or default_steps(tau)
        fn = lambda rng, m: sample_mixed_Z(N, alpha, a, tau, steps, rng, m, reading=reading, log=True)
    else:
        raise ValidationError(f"no partition-function sampler for {kind}")
    return _run_blocks(fn, n_samples, seed, workers)


def laplace_from_log_Z(logZ: np.ndarray, t: float, seed: int) -> McEstimate:
    return _estimate(np.exp(-np.exp(np.minimum(t + logZ, 700.0))), seed)


def mc_laplace(model: str, params: dict, t, n_samples: int, seed: int, n_steps: int | None = None,
               reading: str = "path", workers: int | None = None):
    """Monte Carlo estimate of E[exp(-e^t Z)]; a list of t reuses the same samples."""
    if n_samples < 1000:
        raise ValidationError("mc_laplace needs n_samples >= 1000")
    logZ = sample_log_Z(model, params, n_samples, seed, n_steps, reading, workers)
    if np.ndim(t):
        return [laplace_from_log_Z(logZ, float(x), seed) for x in t]
    return laplace_from_log_Z(logZ, float(t), seed)


# ---------------------------------------------------------------- matrix models

def _complex_normal(rng, shape) -> np.ndarray:
    # E|z|^2 = 1
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def standard_gue(N: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Hermitian matrices with N(0,1) diagonal and complex N(0,1/2)-per-component off-diagonal."""
    Z = _complex_normal(rng, (size, N, N))
    return (Z + np.conj(np.swapaxes(Z, 1, 2))) / math.sqrt(2.0)


def sample_gue_ext(N: int, a, tau: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Eigenvalues of tau diag(a) + sqrt(tau) G, G standard GUE."""
    a = _params_list(a, N, "a")
    if not tau > 0:
        raise ValidationError("tau > 0 required")
    m = 1 if size is None else int(size)
    M = math.sqrt(tau) * standard_gue(N, rng, m)
    M[:, np.arange(N), np.arange(N)] += tau * np.asarray(a)
    ev = np.linalg.eigvalsh(M)
    return ev[0] if size is None else ev


def sample_lue_ext(N: int, b, nu: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Eigenvalues of S^{1/2} X X* S^{1/2}, S = (I - diag b)^{-1}, X complex N x (N + nu)."""
    b = _params_list(b, N, "b")
    if int(nu) != nu or nu < 0:
        raise ValidationError("nu must be a nonnegative integer")
    if any(not 0 <= x < 1 for x in b):
        raise ValidationError("0 <= b_k < 1 required")
    m = 1 if size is None else int(size)
    X = _complex_normal(rng, (m, N, N + int(nu)))
    X = X / np.sqrt(1.0 - np.asarray(b))[None, :, None]
    ev = np.linalg.eigvalsh(X @ np.conj(np.swapaxes(X, 1, 2)))
    return ev[0] if size is None else ev


def sample_glue(N: int, b, tau: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Eigenvalues of M + sqrt(tau) G with M from LUE+ (nu = 0) and G standard GUE."""
    b = _params_list(b, N, "b")
    if not tau >= 0:
        raise ValidationError("tau >= 0 required")
    m = 1 if size is None else int(size)
    X = _complex_normal(rng, (m, N, N)) / np.sqrt(1.0 - np.asarray(b))[None, :, None]
    Q = X @ np.conj(np.swapaxes(X, 1, 2)) + math.sqrt(tau) * standard_gue(N, rng, m)
    ev = np.linalg.eigvalsh(Q)
    return ev[0] if size is None else ev


def sample_ginibre_product(N: int, n_factors: int, rng: np.random.Generator, size: int | None = None,
                           nus=None) -> np.ndarray:
    """Squared singular values of G_n ... G_1, G_k complex Ginibre of size (N + nu_k) x (N + nu_{k-1})."""
    if n_factors < 1:
        raise ValidationError("n_factors >= 1 required")
    nus = [0] * n_factors if nus is None else [int(v) for v in _params_list(nus, n_factors, "nus")]
    m = 1 if size is None else int(size)
    Y = None
    rows_prev = N
    for k in range(n_factors):
        G = _complex_normal(rng, (m, N + nus[k], rows_prev))
        Y = G if Y is None else G @ Y
        rows_prev = N + nus[k]
    ev = np.linalg.eigvalsh(np.conj(np.swapaxes(Y, 1, 2)) @ Y)
    return ev[0] if size is None else ev


def sample_max_eigenvalue(model: str, params: dict, n_samples: int, seed: int,
                          workers: int | None = None) -> np.ndarray:
    """Largest eigenvalue for n_samples draws of a matrix model."""
    kind = canonical_kind(model)
    p = dict(params)
    N = int(p["N"])
    if kind == "GUEext":
        a, tau = _params_list(p.get("a", 0.0), N, "a"), float(p.get("tau", 1.0))
        fn = lambda rng, m: sample_gue_ext(N, a, tau, rng, m)[:, -1]
    elif kind == "LUEext":
        b, nu = _params_list(p.get("b", 0.0), N, "b"), p.get("nu", 0)
        fn = lambda rng, m: sample_lue_ext(N, b, nu, rng, m)[:, -1]
    elif kind == "GLUEext":
        b, tau = _params_list(p.get("b", 0.0), N, "b"), float(p.get("tau", 1.0))
        fn = lambda rng, m: sample_glue(N, b, tau, rng, m)[:, -1]
    elif kind == "GinibreProduct":
        nus = p.get("nus", [0.0])
        nf = int(p.get("n_factors") or (len(nus) if np.ndim(nus) else 1))
        fn = lambda rng, m: sample_ginibre_product(N, nf, rng, m, nus)[:, -1]
    else:
        raise ValidationError(f"no eigenvalue sampler for {kind}")
    return _run_blocks(fn, n_samples, seed, workers)


def mc_gap(model: str, params: dict, s, n_samples: int, seed: int, workers: int | None = None):
    """Monte Carlo estimate of P(max eigenvalue <= s); a list of s reuses the samples."""
    if n_samples < 1000:
        raise ValidationError("mc_gap needs n_samples >= 1000")
    top = sample_max_eigenvalue(model, params, n_samples, seed, workers)
    if np.ndim(s):
        return [_estimate((top <= float(x)).astype(float), seed) for x in s]
    return _estimate((top <= float(s)).astype(float), seed)
