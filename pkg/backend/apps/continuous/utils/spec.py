"""
Continuous corners densities on (yᴺ, …, yᵏ).

A configuration is stored flat and level-major, top level first, each level
in increasing order: (y^N_1..y^N_N, y^{N−1}_1..y^{N−1}_{N−1}, …, y^k_1..y^k_k).
The unnormalized density is

    Π_{j=1}^{k} Γ(θ)^j/Γ(jθ) · Π_{j=k}^{N} Δ(yʲ)^{p_j}
        · Π_{j=k}^{N−1} Π_{a,b} |yʲ_a − yʲ⁺¹_b|^{θ−1} · Π_i exp(−NθV(yᴺ_i))

on strictly interlacing stacks with a− < yᴺ_1, yᴺ_N < a+, where p_N = 1
(2θ when k = N), p_k = 1 and p_j = 2 − 2θ in between.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from apps.numerics.utils import log_gamma_ratio

logger = logging.getLogger(__name__)


class ContinuousSpecError(Exception):
    """Raised for invalid continuous parameters or a configuration of the wrong shape."""
    pass


@dataclass(frozen=True)
class ContinuousSpec:
    """
    θ, the levels k..N, the hard walls a± and a polynomial potential V.

    ``potential`` lists the coefficients of V in increasing degree.
    """
    theta: float
    N: int
    k: int
    a_minus: float
    a_plus: float
    potential: Tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.theta <= 0:
            raise ContinuousSpecError(f"theta must be positive, got {self.theta}")
        if not 1 <= self.k <= self.N:
            raise ContinuousSpecError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if not self.a_minus < self.a_plus:
            raise ContinuousSpecError(f"need a_minus < a_plus, got [{self.a_minus}, {self.a_plus}]")
        coefficients = tuple(float(c) for c in self.potential) or (0.0,)
        if not np.all(np.isfinite(coefficients)):
            raise ContinuousSpecError("potential coefficients must be finite reals")
        object.__setattr__(self, "potential", coefficients)

    @classmethod
    def quadratic(cls, theta: float, N: int, k: int, a_minus: float = -2.0, a_plus: float = 2.0) -> "ContinuousSpec":
        """V(y) = y²/2."""
        return cls(theta, N, k, a_minus, a_plus, (0.0, 0.0, 0.5))

    @cached_property
    def V(self) -> Polynomial:
        return Polynomial(self.potential)

    @cached_property
    def dV(self) -> Polynomial:
        return self.V.deriv()

    @property
    def levels(self) -> range:
        """Level indices from the top down."""
        return range(self.N, self.k - 1, -1)

    @cached_property
    def offsets(self) -> Dict[int, int]:
        offsets, position = {}, 0
        for j in self.levels:
            offsets[j] = position
            position += j
        return offsets

    @property
    def dimension(self) -> int:
        return sum(self.levels)

    def level_exponent(self, j: int) -> float:
        """Power of the level-j Vandermonde in the projected density."""
        if j == self.N:
            return 2.0 * self.theta if self.k == self.N else 1.0
        if j == self.k:
            return 1.0
        return 2.0 - 2.0 * self.theta

    @cached_property
    def log_constant(self) -> float:
        """log Π_{j=1}^{k} Γ(θ)^j / Γ(jθ)."""
        return log_gamma_ratio(
            [self.theta] * (self.k * (self.k + 1) // 2),
            [j * self.theta for j in range(1, self.k + 1)],
        )

    def level(self, flat: np.ndarray, j: int) -> np.ndarray:
        """The level-j block of one or many flat configurations."""
        start = self.offsets[j]
        return np.asarray(flat)[..., start:start + j]

    def flatten(self, stack: Sequence[Sequence[float]]) -> np.ndarray:
        """Join levels given top first into one flat configuration."""
        levels = [np.asarray(level, dtype=float) for level in stack]
        if [len(level) for level in levels] != list(self.levels):
            raise ContinuousSpecError(f"stack must hold levels of sizes {list(self.levels)}")
        return np.concatenate(levels)

    def describe(self) -> dict:
        return {
            "theta": self.theta,
            "N": self.N,
            "k": self.k,
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "potential": list(self.potential),
        }


def _pair_log_sum(values: np.ndarray) -> np.ndarray:
    """Σ_{a<b} log(y_b − y_a) along the last axis, −inf if not increasing."""
    n = values.shape[-1]
    total = np.zeros(values.shape[:-1])
    for a in range(n):
        for b in range(a + 1, n):
            total = total + np.log(values[..., b] - values[..., a])
    return total


def is_valid(spec: ContinuousSpec, flat: np.ndarray) -> np.ndarray:
    """Strict interlacing and the hard walls, per configuration."""
    flat = np.atleast_2d(flat)
    top = spec.level(flat, spec.N)
    valid = (top[:, 0] > spec.a_minus) & (top[:, -1] < spec.a_plus)
    for j in spec.levels:
        valid &= np.all(np.diff(spec.level(flat, j), axis=-1) > 0, axis=-1)
        if j > spec.k:
            upper, lower = spec.level(flat, j), spec.level(flat, j - 1)
            valid &= np.all(upper[:, :-1] < lower, axis=-1) & np.all(lower < upper[:, 1:], axis=-1)
    return valid


def log_density_batch(spec: ContinuousSpec, flat: np.ndarray) -> np.ndarray:
    """Unnormalized log density of each row of ``flat``; −inf off the support."""
    flat = np.atleast_2d(np.asarray(flat, dtype=float))
    if flat.shape[-1] != spec.dimension:
        raise ContinuousSpecError(f"configurations must have {spec.dimension} coordinates, got {flat.shape[-1]}")
    valid = is_valid(spec, flat)
    theta = spec.theta
    with np.errstate(divide="ignore", invalid="ignore"):
        total = np.full(flat.shape[0], spec.log_constant)
        for j in spec.levels:
            level = spec.level(flat, j)
            total = total + spec.level_exponent(j) * _pair_log_sum(level)
            if j < spec.N and theta != 1:
                upper = spec.level(flat, j + 1)
                gaps = np.abs(level[:, :, None] - upper[:, None, :])
                total = total + (theta - 1.0) * np.sum(np.log(gaps), axis=(1, 2))
        total = total - spec.N * theta * np.sum(spec.V(spec.level(flat, spec.N)), axis=-1)
    return np.where(valid, total, -np.inf)


def log_density(spec: ContinuousSpec, stack) -> float:
    """
    Unnormalized log density of one configuration.

    Args:
        stack: a flat configuration or a sequence of levels, top first

    Returns:
        the log density, −inf when the stack does not interlace or leaves (a−, a+)
    """
    if isinstance(stack, np.ndarray) and stack.ndim == 1:
        flat = stack.astype(float)
    else:
        flat = spec.flatten(stack)
    return float(log_density_batch(spec, flat[None, :])[0])


def initial_stack(spec: ContinuousSpec) -> np.ndarray:
    """Evenly spaced top level, each lower level at the midpoints of the one above."""
    width = spec.a_plus - spec.a_minus
    level = spec.a_minus + width * np.arange(1, spec.N + 1) / (spec.N + 1)
    levels = [level]
    for _ in range(spec.N - spec.k):
        level = 0.5 * (level[:-1] + level[1:])
        levels.append(level)
    return np.concatenate(levels)
