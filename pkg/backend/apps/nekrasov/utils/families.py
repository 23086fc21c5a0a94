"""
Analytic families φ₁ʲ, φ₂ʲ (j = k..N+1) attached to a discrete measure.

A family is compatible with the per-level weights when

    φ₁ʲ⁺¹(z)/φ₁ʲ(z) = w_j(z−1)/w_j(z)                     on [1−jθ, M−θ]
    φ₂ʲ(z)/φ₂ʲ⁺¹(z) = w_j(z+(N−j)θ−1)/w_j(z+(N−j)θ)       on [1−Nθ, M−(N−j+1)θ]

and both relations are checked at every lattice point a − bθ inside those
intervals. The φ's here are entire by construction: a constant times a
product of linear factors times the exponential of a polynomial.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from apps.discrete.utils import (
    GeometricWeight,
    MeasureSpec,
    TabulatedWeight,
    WeightFunction,
    krawtchouk_weight,
)
from apps.state_space.utils import exact_theta

logger = logging.getLogger(__name__)

COMPATIBILITY_TOL = 1e-10


class FamilyError(Exception):
    """Raised when a φ family is malformed or incompatible with the weights."""
    pass


@dataclass(frozen=True)
class PhiFunction:
    """z ↦ constant · Π (z − root) · exp(exponent(z)); ``exponent`` lists polynomial coefficients."""
    constant: complex = 1.0
    roots: Tuple[float, ...] = ()
    exponent: Tuple[complex, ...] = ()

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        value = np.full(z.shape, complex(self.constant))
        for root in self.roots:
            value = value * (z - root)
        if self.exponent:
            value = value * np.exp(Polynomial(np.asarray(self.exponent, dtype=complex))(z))
        return value

    def scaled(self, factor: complex) -> "PhiFunction":
        return replace(self, constant=complex(self.constant) * factor)

    def describe(self) -> dict:
        return {
            "constant": complex(self.constant),
            "roots": list(self.roots),
            "exponent": [complex(c) for c in self.exponent],
        }


@dataclass(frozen=True)
class CompatibilityViolation:
    relation: str
    level: int
    point: float
    lhs: complex
    rhs: complex

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


@dataclass(frozen=True)
class AnalyticFamily:
    """
    φ₁ʲ and φ₂ʲ for j = k..N+1, stored so that ``phi1[j - k]`` is φ₁ʲ.
    """
    N: int
    k: int
    phi1: Tuple[PhiFunction, ...]
    phi2: Tuple[PhiFunction, ...]
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        expected = self.N - self.k + 2
        object.__setattr__(self, "phi1", tuple(self.phi1))
        object.__setattr__(self, "phi2", tuple(self.phi2))
        if len(self.phi1) != expected or len(self.phi2) != expected:
            raise FamilyError(
                f"need {expected} functions per side for k={self.k}, N={self.N}, "
                f"got {len(self.phi1)} and {len(self.phi2)}"
            )

    def phi(self, which: str, j: int) -> PhiFunction:
        if not self.k <= j <= self.N + 1:
            raise FamilyError(f"φ index {j} outside [{self.k}, {self.N + 1}]")
        if which == "R1":
            return self.phi1[j - self.k]
        if which == "R2":
            return self.phi2[j - self.k]
        raise FamilyError(f"unknown side {which!r}, expected 'R1' or 'R2'")

    def corrupted(self, factor: complex = 1.01) -> "AnalyticFamily":
        """The same family with φ₁ᵏ multiplied by ``factor``."""
        phi1 = (self.phi1[0].scaled(factor),) + self.phi1[1:]
        return replace(self, phi1=phi1, label=f"{self.label}*corrupted")

    def validate(self, spec: MeasureSpec, tol: float = COMPATIBILITY_TOL) -> List[CompatibilityViolation]:
        """Every lattice point where one of the two compatibility relations fails."""
        if (spec.N, spec.k) != (self.N, self.k):
            raise FamilyError(f"family dims (N={self.N}, k={self.k}) do not match the measure")
        theta, N = spec.theta, spec.N
        violations = []
        for j in range(spec.k, N + 1):
            weight = spec.weight(j)
            for b in range(1, j + 1):
                for a in range(1, spec.M + 1):
                    x = a - b * theta
                    ratio = lattice_ratio(weight, x)

                    lhs = complex(self.phi1[j + 1 - self.k](x))
                    rhs = complex(self.phi1[j - self.k](x)) * ratio
                    if abs(lhs - rhs) > tol * max(1.0, abs(lhs), abs(rhs)):
                        violations.append(CompatibilityViolation("phi1", j, x, lhs, rhs))

                    y = x - (N - j) * theta
                    lhs = complex(self.phi2[j - self.k](y))
                    rhs = complex(self.phi2[j + 1 - self.k](y)) * ratio
                    if abs(lhs - rhs) > tol * max(1.0, abs(lhs), abs(rhs)):
                        violations.append(CompatibilityViolation("phi2", j, y, lhs, rhs))
        if violations:
            logger.debug(f"Family {self.label}: {len(violations)} compatibility violations")
        return violations

    def ensure_compatible(self, spec: MeasureSpec, tol: float = COMPATIBILITY_TOL):
        violations = self.validate(spec, tol)
        if violations:
            worst = max(violations, key=lambda v: v.gap)
            raise FamilyError(
                f"family {self.label} violates {worst.relation} at level {worst.level}, "
                f"x={worst.point:.6g}: {worst.lhs:.6g} != {worst.rhs:.6g} "
                f"({len(violations)} violations)"
            )

    def describe(self) -> dict:
        return {
            "label": self.label,
            "N": self.N,
            "k": self.k,
            "phi1": {str(self.k + n): phi.describe() for n, phi in enumerate(self.phi1)},
            "phi2": {str(self.k + n): phi.describe() for n, phi in enumerate(self.phi2)},
        }


def lattice_ratio(weight: WeightFunction, x: float) -> complex:
    """w(x−1)/w(x), from the closed form when the weight has one."""
    if weight.analytic:
        return complex(weight.backward_ratio(x))
    values = weight.log_value(np.array([x - 1.0, x]))
    return complex(np.exp(values[0] - values[1]))


def krawtchouk_family(q: float, theta: float, N: int, k: int, M: int) -> Tuple[MeasureSpec, AnalyticFamily]:
    """
    w_j ≡ 1 below the top, Krawtchouk-type w_N, with Φ₊(x) = q(M+1−θ−x) and
    Φ₋(x) = x + Nθ. φ₁ᴺ⁺¹ = φ₂ʲ = Φ₋ and φ₁ʲ = φ₂ᴺ⁺¹ = Φ₊ for j ≤ N.

    Φ₋(−Nθ) = Φ₊(M+1−θ) = 0, so both boundary correction terms vanish.
    """
    plus = PhiFunction(constant=-q, roots=(M + 1.0 - theta,))
    minus = PhiFunction(constant=1.0, roots=(-N * theta,))
    levels = N - k + 1
    family = AnalyticFamily(
        N=N,
        k=k,
        phi1=(plus,) * levels + (minus,),
        phi2=(minus,) * levels + (plus,),
        label="krawtchouk",
    )
    spec = MeasureSpec.from_levels(theta, N, k, M, {N: krawtchouk_weight(q, N, M, theta)})
    return spec, family


def geometric_family(qs: Sequence[float], N: int, k: int) -> AnalyticFamily:
    """
    Constant φ's for w_j(x) = q_jˣ, with ``qs[j - k]`` = q_j:
    φ₁ʲ = Π_{i=k}^{j−1} 1/q_i and φ₂ʲ = Π_{i=j}^{N} 1/q_i.
    """
    qs = tuple(qs)
    if len(qs) != N - k + 1:
        raise FamilyError(f"need {N - k + 1} geometric bases, got {len(qs)}")
    if any(q == 0 for q in qs):
        raise FamilyError("geometric bases must be nonzero")
    phi1, phi2 = [], []
    for j in range(k, N + 2):
        phi1.append(PhiFunction(constant=complex(np.prod([1.0 / q for q in qs[: j - k]]))))
        phi2.append(PhiFunction(constant=complex(np.prod([1.0 / q for q in qs[j - k:]]))))
    return AnalyticFamily(N=N, k=k, phi1=tuple(phi1), phi2=tuple(phi2), label="geometric")


def geometric_setup(qs: Sequence[float], theta: float, N: int, k: int, M: int) -> Tuple[MeasureSpec, AnalyticFamily]:
    family = geometric_family(qs, N, k)
    spec = MeasureSpec(theta, N, k, M, tuple(GeometricWeight(q) for q in qs))
    return spec, family


def derive_weights(family: AnalyticFamily, theta: float, M: int) -> MeasureSpec:
    """
    Rebuild w_j from φ₁ by walking each lattice class downward from its
    maximum, where w is set to 1, with w(x−1) = w(x)·φ₁ʲ⁺¹(x)/φ₁ʲ(x).

    Raises:
        FamilyError: if a ratio is singular or the recursion produces a zero weight
    """
    theta_q = exact_theta(theta)
    weights = []
    for j in range(family.k, family.N + 1):
        classes: Dict[object, List] = defaultdict(list)
        for p in range(1, j + 1):
            for a in range(M + 1):
                point = a - p * theta_q
                classes[point % 1].append(point)

        upper = family.phi1[j + 1 - family.k]
        lower = family.phi1[j - family.k]
        table = {}
        for points in classes.values():
            x, bottom = max(points), min(points)
            value = 1.0 + 0j
            table[x] = value
            while x > bottom:
                denominator = complex(lower(float(x)))
                if denominator == 0:
                    raise FamilyError(f"φ₁^{j} vanishes at the lattice point {float(x):.6g}")
                value *= complex(upper(float(x))) / denominator
                if value == 0:
                    raise FamilyError(f"derived w_{j} vanishes at {float(x - 1):.6g}")
                x -= 1
                table[x] = value
        weights.append(TabulatedWeight(tuple((float(x), v) for x, v in sorted(table.items()))))
    logger.debug(f"Derived tabulated weights for levels {family.k}..{family.N} from {family.label}")
    return MeasureSpec(theta, family.N, family.k, M, tuple(weights))


def boundary_points(theta: float, N: int, M: int) -> Tuple[float, float]:
    """(−Nθ, s_M) with s_M = M + 1 − θ."""
    return -N * theta, M + 1.0 - theta

