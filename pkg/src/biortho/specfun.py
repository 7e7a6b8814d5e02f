"""Complex log-gamma and related primitives.

Everything works on numpy arrays as well as scalars.  Values of symbols built
from gamma functions are always handled in log space so that products of many
gamma factors never overflow.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PoleError

# Lanczos approximation with g = 7 and 9 coefficients.
_G = 7.0
_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
POLE_TOL = 1e-12


def _lanczos(z: np.ndarray) -> np.ndarray:
    # log Gamma(z) for Re z >= 0.5
    w = z - 1.0
    acc = np.full(w.shape, _COEF[0], dtype=complex)
    for k in range(1, len(_COEF)):
        acc = acc + _COEF[k] / (w + k)
    t = w + _G + 0.5
    return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(acc)


def log_gamma(z):
    """Principal branch of log Gamma on the plane cut along (-inf, 0].

    Points with Re z < 0.5 are shifted right by the recurrence
    log Gamma(z) = log Gamma(z + m) - sum_j log(z + j); the principal logs of
    z + j have their cuts on the negative axis only, so the result is the
    analytic continuation used by e.g. ``scipy.special.loggamma``.
    """
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    re = z.real
    near_int = np.abs(z - np.round(re)) < POLE_TOL
    if np.any(near_int & (np.round(re) <= 0)):
        raise PoleError("log_gamma: argument within 1e-12 of a nonpositive integer")
    shift = np.where(re < 0.5, np.ceil(0.5 - re), 0.0).astype(int)
    out = _lanczos(z + shift)
    mmax = int(shift.max()) if shift.size else 0
    for j in range(mmax):
        mask = shift > j
        out = out - np.where(mask, np.log(np.where(mask, z + j, 1.0)), 0.0)
    if scalar:
        return complex(out)
    return out


def rgamma_log(z):
    """-log Gamma(z), but finite (returns -inf real part) at the poles.

    1/Gamma is entire; callers that need log(1/Gamma(z)) near a nonpositive
    integer get -inf there instead of an exception.
    """
    z = np.asarray(z, dtype=complex)
    re = z.real
    at_pole = (np.abs(z - np.round(re)) < POLE_TOL) & (np.round(re) <= 0)
    safe = np.where(at_pole, 1.0, z)
    out = -log_gamma(safe)
    return np.where(at_pole, -np.inf + 0j, out)


def stirling_decay_rate(x: float, direction: int = 1) -> float:
    """Exponential decay rate of |Gamma(x + iy)| per unit |y| as y -> +-inf.

    The rate is pi/2 independently of x and of the direction.
    """
    del x, direction
    return math.pi / 2.0


def stirling_modulus(x: float, y):
    """Leading Stirling approximation sqrt(2 pi)|y|^(x-1/2) exp(-pi|y|/2)."""
    y = np.abs(np.asarray(y, dtype=float))
    return math.sqrt(2.0 * math.pi) * y ** (x - 0.5) * np.exp(-math.pi * y / 2.0)
