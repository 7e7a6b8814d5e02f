"""Descriptors for the statistic function sigma in mu_N[sigma]."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SigmaSpec:
    """sigma(x) for the multiplicative statistic prod_k (1 - sigma(x_k)).

    kinds:
      fermi      sigma(x) = 1 / (1 + exp(-x - t))
      indicator  sigma(x) = 1 for x > threshold, 0 otherwise
      zero       sigma = 0
      custom     user function with declared exponential decay rate at -inf
    """

    kind: str
    t: float = 0.0
    threshold: float = 0.0
    decay_minus: float = math.inf
    func: Callable | None = field(default=None, compare=False, repr=False)
    deriv: Callable | None = field(default=None, compare=False, repr=False)
    offset: float = 0.0

    @classmethod
    def fermi(cls, t: float = 0.0) -> "SigmaSpec":
        return cls("fermi", t=float(t), decay_minus=1.0)

    @classmethod
    def indicator(cls, threshold: float = 0.0) -> "SigmaSpec":
        return cls("indicator", threshold=float(threshold))

    @classmethod
    def zero(cls) -> "SigmaSpec":
        return cls("zero")

    @classmethod
    def custom(cls, func: Callable, decay_minus: float, deriv: Callable | None = None) -> "SigmaSpec":
        if not callable(func):
            raise ValidationError("custom sigma needs a callable")
        if decay_minus is None or not decay_minus >= 0:
            raise ValidationError("custom sigma must declare a nonnegative decay rate at -infinity")
        return cls("custom", decay_minus=float(decay_minus), func=func, deriv=deriv)

    @classmethod
    def from_table(cls, xs, ys, decay_minus: float) -> "SigmaSpec":
        """Piecewise-linear sigma from samples, constant beyond the table."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ValidationError("sigma table needs increasing x values and matching y values")
        return cls.custom(lambda x: np.interp(x, xs, ys), decay_minus,
                          deriv=lambda x: np.interp(x, 0.5 * (xs[1:] + xs[:-1]), np.diff(ys) / np.diff(xs)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "fermi":
            return 0.5 * (1.0 + np.tanh(0.5 * (x + self.t)))
        if self.kind == "indicator":
            return (x > self.threshold).astype(float)
        if self.kind == "zero":
            return np.zeros_like(x)
        return np.asarray(self.func(x + self.offset), dtype=float)

    def derivative(self, x):
        """sigma'(x); the indicator has a Dirac mass and is handled by callers."""
        x = np.asarray(x, dtype=float)
        if self.kind == "fermi":
            s = self(x)
            return s * (1.0 - s)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "custom" and self.deriv is not None:
            return np.asarray(self.deriv(x + self.offset), dtype=float)
        raise ValidationError(f"sigma of kind {self.kind} has no pointwise derivative")

    def shifted(self, dt: float) -> "SigmaSpec":
        """x -> sigma(x + dt)."""
        if self.kind == "fermi":
            return SigmaSpec.fermi(self.t + dt)
        if self.kind == "indicator":
            return SigmaSpec.indicator(self.threshold - dt)
        if self.kind == "zero":
            return self
        return SigmaSpec("custom", decay_minus=self.decay_minus, func=self.func, deriv=self.deriv,
                         offset=self.offset + dt)

    def mellin(self, s):
        """Closed form of F(s) = int sigma(x) exp(-s x) dx, or None.

        Fermi: exp(t s) pi / sin(pi s) for 0 < Re s < 1.
        Indicator: exp(-s x0) / s for Re s > 0.
        """
        s = np.asarray(s, dtype=complex)
        if self.kind == "fermi":
            return np.exp(self.t * s) * pi_over_sin(s)
        if self.kind == "indicator":
            return np.exp(-s * self.threshold) / s
        if self.kind == "zero":
            return np.zeros_like(s)
        return None

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.threshold,) if self.kind == "indicator" else ()

    def describe(self) -> dict:
        if self.kind == "fermi":
            return {"sigma": "fermi", "t": self.t}
        if self.kind == "indicator":
            return {"sigma": "indicator", "threshold": self.threshold}
        return {"sigma": self.kind}


def pi_over_sin(z):
    """pi / sin(pi z) without overflow for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    up = z.imag >= 0
    zz = np.where(up, z, np.conj(z))
    e = np.exp(1j * np.pi * zz)  # |e| <= 1 in the upper half plane
    val = 2j * np.pi * e / (e * e - 1.0)
    return np.where(up, val, np.conj(val))
