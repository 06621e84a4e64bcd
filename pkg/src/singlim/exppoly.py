"""Exact arithmetic on exponential polynomials sum_j c_j * t**k_j * exp(mu_j*t).

Every closed-form trajectory in this package (damped modes, semigroup
kernels, layer terms) lives in this family, and the family is closed under
differentiation, products, and integration.  That gives analytic time
integrals for the energy functionals, with quadrature demoted to a
cross-check.

Rates mu may be complex; real-valued functions carry conjugate term pairs
and evaluation returns the real part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ExpPoly", "power_exp_moment"]

# Below this value of |mu*t| the upward recurrence for the moments
# int_0^t s**k exp(mu*s) ds loses digits to cancellation; use the series.
_SERIES_THRESHOLD = 0.8


def power_exp_moment(k: int, mu: complex, t):
    """int_0^t s**k * exp(mu*s) ds for scalar mu and scalar or array t."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    t = np.asarray(t, dtype=float)
    if mu == 0:
        return t ** (k + 1) / (k + 1) + 0j
    out = np.empty(t.shape, dtype=complex)
    small = np.abs(mu * t) < _SERIES_THRESHOLD
    if np.any(small):
        out[small] = _moment_series(k, mu, t[small])
    if np.any(~small):
        out[~small] = _moment_recurrence(k, mu, t[~small])
    return out


def _moment_series(k: int, mu: complex, t: np.ndarray) -> np.ndarray:
    # int_0^t s^k e^{mu s} ds = t^{k+1} * sum_m (mu t)^m / (m! (k+m+1))
    z = mu * t
    term = np.ones(t.shape, dtype=complex) / (k + 1)
    acc = term.copy()
    for m in range(1, 60):
        term = term * z * (k + m) / (m * (k + m + 1))
        acc += term
        if np.all(np.abs(term) <= 1e-18 * np.abs(acc)):
            break
    return t ** (k + 1) * acc


def _moment_recurrence(k: int, mu: complex, t: np.ndarray) -> np.ndarray:
    e = np.exp(mu * t)
    acc = (e - 1.0) / mu
    for j in range(1, k + 1):
        acc = (t**j * e - j * acc) / mu
    return acc


def _infinite_moment(k: int, mu: complex) -> complex:
    # int_0^inf s^k e^{mu s} ds, requires Re mu < 0
    return math.factorial(k) / (-mu) ** (k + 1)


@dataclass(frozen=True)
class ExpPoly:
    """Finite term list ((k, mu, c), ...) representing sum c * t**k * e^{mu t}."""

    terms: tuple[tuple[int, complex, complex], ...]

    @staticmethod
    def build(terms) -> "ExpPoly":
        """Merge duplicates (same power and rate) and drop zero coefficients."""
        merged: dict[tuple[int, complex], complex] = {}
        for k, mu, c in terms:
            if c == 0:
                continue
            key = (int(k), complex(mu))
            merged[key] = merged.get(key, 0j) + complex(c)
        cleaned = tuple(
            (k, mu, c)
            for (k, mu), c in sorted(
                merged.items(), key=lambda kv: (kv[0][0], kv[0][1].real, kv[0][1].imag)
            )
            if c != 0
        )
        return ExpPoly(cleaned)

    @staticmethod
    def zero() -> "ExpPoly":
        return ExpPoly(())

    @staticmethod
    def constant(c: float) -> "ExpPoly":
        return ExpPoly.build([(0, 0.0, c)])

    @staticmethod
    def exponential(c: float, mu: complex) -> "ExpPoly":
        """c * exp(mu*t)."""
        return ExpPoly.build([(0, mu, c)])

    def value(self, t):
        """Evaluate at scalar or array t; returns the real part."""
        t = np.asarray(t, dtype=float)
        acc = np.zeros(t.shape, dtype=complex)
        for k, mu, c in self.terms:
            acc += c * t**k * np.exp(mu * t)
        return acc.real if acc.ndim else float(acc.real)

    def derivative(self) -> "ExpPoly":
        terms = []
        for k, mu, c in self.terms:
            if k > 0:
                terms.append((k - 1, mu, k * c))
            terms.append((k, mu, mu * c))
        return ExpPoly.build(terms)

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        return ExpPoly.build(self.terms + other.terms)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + other.scale(-1.0)

    def scale(self, alpha: complex) -> "ExpPoly":
        return ExpPoly.build([(k, mu, alpha * c) for k, mu, c in self.terms])

    def multiply(self, other: "ExpPoly") -> "ExpPoly":
        terms = []
        for k1, mu1, c1 in self.terms:
            for k2, mu2, c2 in other.terms:
                terms.append((k1 + k2, mu1 + mu2, c1 * c2))
        return ExpPoly.build(terms)

    def squared(self) -> "ExpPoly":
        return self.multiply(self)

    def integral(self, t):
        """int_0^t of the function, evaluated at scalar or array t."""
        t = np.asarray(t, dtype=float)
        acc = np.zeros(t.shape, dtype=complex)
        for k, mu, c in self.terms:
            acc += c * power_exp_moment(k, mu, t)
        return acc.real if acc.ndim else float(acc.real)

    def integral_to_infinity(self) -> float:
        """int_0^inf of the function; requires every rate to decay."""
        acc = 0j
        for k, mu, c in self.terms:
            if mu.real >= 0:
                raise ValueError(
                    f"integrand does not decay (rate {mu}); integral diverges"
                )
            acc += c * _infinite_moment(k, mu)
        return acc.real

    def coefficient_scale(self) -> float:
        """Largest term magnitude; a conditioning measure for evaluations."""
        return max((abs(c) for _, _, c in self.terms), default=0.0)

    def max_degree(self) -> int:
        return max((k for k, _, _ in self.terms), default=0)
