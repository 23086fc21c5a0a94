"""
Per-level weight functions w_j of the discrete corners measure.

Four constructors cover every measure the lab builds: geometric, exponential
of a polynomial, Gamma-ratio (Krawtchouk type) and tabulated. The first three
carry an analytic continuation through ``backward_ratio``; tabulated and
opaque callables do not, which disables the Nekrasov checks downstream.
"""

import cmath
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from apps.numerics.utils import NumericsDomainError, log_gamma


class MeasureContractError(Exception):
    """Raised when a measure or weight is used outside its contract."""
    pass


class WeightFunction:
    """
    Base class. Subclasses return the complex logarithm of w on real lattice points.
    """

    analytic = True

    def log_value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return np.exp(self.log_value(np.asarray(x, dtype=float)))

    def is_positive(self) -> bool:
        raise NotImplementedError

    def backward_ratio(self, z):
        """w(z − 1)/w(z), continued analytically to complex z."""
        raise MeasureContractError(f"{type(self).__name__} has no analytic continuation")

    def forward_ratio(self, z):
        """w(z + 1)/w(z)."""
        return 1.0 / self.backward_ratio(np.asarray(z) + 1.0)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


def _complex_log(q: complex) -> complex:
    if q == 0:
        raise MeasureContractError("weight base q must be nonzero")
    return cmath.log(q)


@dataclass(frozen=True)
class GeometricWeight(WeightFunction):
    """w(x) = qˣ; q = 1 gives the constant weight."""
    q: complex = 1.0

    def log_value(self, x):
        return np.asarray(x, dtype=float) * _complex_log(self.q) + 0j

    def is_positive(self) -> bool:
        return complex(self.q).imag == 0 and complex(self.q).real > 0

    def backward_ratio(self, z):
        return np.ones_like(np.asarray(z, dtype=complex)) / self.q

    def describe(self) -> dict:
        return {"kind": "geometric", "q": self.q}


@dataclass(frozen=True)
class ExpPolynomialWeight(WeightFunction):
    """w(x) = exp(c₀ + c₁x + c₂x² + …)."""
    coefficients: Tuple[complex, ...] = (0.0,)

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial(np.asarray(self.coefficients, dtype=complex))

    def log_value(self, x):
        return self.polynomial(np.asarray(x, dtype=float)) + 0j

    def is_positive(self) -> bool:
        return all(complex(c).imag == 0 for c in self.coefficients)

    def backward_ratio(self, z):
        z = np.asarray(z, dtype=complex)
        poly = self.polynomial
        return np.exp(poly(z - 1.0) - poly(z))

    def describe(self) -> dict:
        return {"kind": "exp_polynomial", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class GammaRatioWeight(WeightFunction):
    """
    w(x) = qˣ · Π Γ(s·x + c) over ``numerator`` / Π Γ(s·x + c) over ``denominator``.

    Each factor is a pair (s, c) with s = ±1, which keeps w(z−1)/w(z) rational.
    """
    q: float = 1.0
    numerator: Tuple[Tuple[int, float], ...] = ()
    denominator: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        for scale, _ in self.numerator + self.denominator:
            if scale not in (1, -1):
                raise MeasureContractError(f"Gamma-ratio scales must be ±1, got {scale}")

    def log_value(self, x):
        x = np.asarray(x, dtype=float)
        total = x * _complex_log(self.q) + 0j
        try:
            for scale, shift in self.numerator:
                total = total + log_gamma(scale * x + shift)
            for scale, shift in self.denominator:
                total = total - log_gamma(scale * x + shift)
        except NumericsDomainError as exc:
            raise MeasureContractError(f"weight evaluated outside its domain: {exc}") from exc
        return total

    def is_positive(self) -> bool:
        return complex(self.q).imag == 0 and complex(self.q).real > 0

    @staticmethod
    def _gamma_step(scale: int, shift: float, z):
        # Γ(s(z−1)+c)/Γ(sz+c)
        if scale == 1:
            return 1.0 / (z - 1.0 + shift)
        return shift - z

    def backward_ratio(self, z):
        z = np.asarray(z, dtype=complex)
        ratio = np.ones_like(z) / self.q
        for scale, shift in self.numerator:
            ratio = ratio * self._gamma_step(scale, shift, z)
        for scale, shift in self.denominator:
            ratio = ratio / self._gamma_step(scale, shift, z)
        return ratio

    def describe(self) -> dict:
        return {
            "kind": "gamma_ratio",
            "q": self.q,
            "numerator": [list(f) for f in self.numerator],
            "denominator": [list(f) for f in self.denominator],
        }


@dataclass(frozen=True)
class TabulatedWeight(WeightFunction):
    """Weights given as (x, value) pairs on the lattice."""
    table: Tuple[Tuple[float, complex], ...] = ()

    analytic = False

    def _lookup(self):
        return {round(float(x), 9): complex(value) for x, value in self.table}

    def log_value(self, x):
        lookup = self._lookup()
        flat = np.ravel(np.asarray(x, dtype=float))
        out = np.empty(flat.shape, dtype=complex)
        for n, point in enumerate(flat):
            value = lookup.get(round(float(point), 9))
            if value is None or value == 0:
                raise MeasureContractError(f"tabulated weight has no nonzero value at {point}")
            out[n] = cmath.log(value)
        return out.reshape(np.shape(x))

    def is_positive(self) -> bool:
        return all(complex(v).imag == 0 and complex(v).real > 0 for _, v in self.table)

    def describe(self) -> dict:
        return {"kind": "tabulated", "size": len(self.table)}


@dataclass(frozen=True)
class CallableWeight(WeightFunction):
    """An opaque positive function; accepted by the measure, refused by Nekrasov checks."""
    func: Callable = None

    analytic = False

    def log_value(self, x):
        values = np.asarray(np.vectorize(self.func, otypes=[complex])(np.asarray(x, dtype=float)))
        if np.any(values == 0):
            raise MeasureContractError("callable weight vanished on the lattice")
        return np.log(values)

    def is_positive(self) -> bool:
        return False


def constant_weight() -> GeometricWeight:
    return GeometricWeight(1.0)


def krawtchouk_weight(q: float, N: int, M: int, theta: float) -> GammaRatioWeight:
    """
    w(x) = qˣ / (Γ(x + Nθ + 1) Γ(M + 1 − θ − x)).

    Then w(x−1)/w(x) = (x + Nθ) / (q (M + 1 − θ − x)), which vanishes at x = −Nθ.
    """
    return GammaRatioWeight(
        q=q,
        numerator=(),
        denominator=((1, N * theta + 1.0), (-1, M + 1.0 - theta)),
    )
