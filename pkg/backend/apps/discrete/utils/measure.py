"""
The discrete β-corners measure

    P(ℓ) ∝ Hᵗ(ℓᴺ) · Hᵇ(ℓᵏ) · Π_{j=k}^{N−1} I(ℓʲ⁺¹, ℓʲ)

evaluated entirely in log-space. Every Gamma argument is strictly positive on
an interlaced pattern, so a domain error from log_gamma always means the
pattern was broken upstream.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from apps.numerics.utils import NumericsDomainError, log_gamma
from apps.state_space.utils import CornersPattern, shifted_positions

from .weights import MeasureContractError, WeightFunction, constant_weight

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeasureSpec:
    """
    Dimensions, θ and the per-level weights; ``weights[j - k]`` is w_j.
    """
    theta: float
    N: int
    k: int
    M: int
    weights: Tuple[WeightFunction, ...]

    def __post_init__(self):
        if self.theta <= 0:
            raise MeasureContractError(f"theta must be positive, got {self.theta}")
        if not 1 <= self.k <= self.N:
            raise MeasureContractError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if self.M < 0:
            raise MeasureContractError(f"M must be nonnegative, got {self.M}")
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(self.weights) != self.N - self.k + 1:
            raise MeasureContractError(
                f"expected {self.N - self.k + 1} level weights, got {len(self.weights)}"
            )

    @classmethod
    def uniform(cls, theta: float, N: int, k: int, M: int) -> "MeasureSpec":
        """All weights identically one."""
        return cls(theta, N, k, M, tuple(constant_weight() for _ in range(k, N + 1)))

    @classmethod
    def from_levels(cls, theta: float, N: int, k: int, M: int, weights: Dict[int, WeightFunction]):
        """Build from a {level: weight} mapping; missing levels get w ≡ 1."""
        return cls(theta, N, k, M, tuple(weights.get(j, constant_weight()) for j in range(k, N + 1)))

    def weight(self, j: int) -> WeightFunction:
        if not self.k <= j <= self.N:
            raise MeasureContractError(f"level {j} outside [{self.k}, {self.N}]")
        return self.weights[j - self.k]

    @property
    def is_probability(self) -> bool:
        return all(w.is_positive() for w in self.weights)

    @property
    def is_analytic(self) -> bool:
        return all(w.analytic for w in self.weights)

    def check_pattern(self, pattern: CornersPattern):
        if (pattern.N, pattern.k, pattern.M) != (self.N, self.k, self.M):
            raise MeasureContractError(
                f"pattern dims {(pattern.N, pattern.k, pattern.M)} do not match "
                f"measure dims {(self.N, self.k, self.M)}"
            )

    def describe(self) -> dict:
        return {
            "theta": self.theta,
            "N": self.N,
            "k": self.k,
            "M": self.M,
            "weights": {str(j): self.weight(j).describe() for j in range(self.k, self.N + 1)},
        }


@dataclass(frozen=True)
class LogWeight:
    """Unnormalized weight stored as phase · exp(log_modulus)."""
    log_modulus: float
    phase: complex = 1.0

    @property
    def value(self) -> complex:
        return self.phase * np.exp(self.log_modulus)

    @classmethod
    def from_complex_log(cls, value: complex) -> "LogWeight":
        value = complex(value)
        return cls(log_modulus=value.real, phase=complex(np.exp(1j * value.imag)))


def _pair_indices(n_left: int, n_right: int, strict: bool):
    p, q = np.meshgrid(np.arange(n_left), np.arange(n_right), indexing="ij")
    mask = p < q if strict else p <= q
    return p[mask], q[mask]


def _gamma_pair_sum(diffs: np.ndarray, num_shift: float, den_shift: float) -> np.ndarray:
    """Σ over the last axis of lnΓ(d + num_shift) − lnΓ(d + den_shift)."""
    if diffs.shape[-1] == 0:
        return np.zeros(diffs.shape[:-1])
    return np.sum(log_gamma(diffs + num_shift) - log_gamma(diffs + den_shift), axis=-1)


def log_top(ell: np.ndarray, theta: float) -> np.ndarray:
    """ln Π_{p<q} Γ(ℓ_p − ℓ_q + 1)/Γ(ℓ_p − ℓ_q + 1 − θ), rows of ``ell`` are patterns."""
    p, q = _pair_indices(ell.shape[-1], ell.shape[-1], strict=True)
    return _gamma_pair_sum(ell[..., p] - ell[..., q], 1.0, 1.0 - theta)


def log_bottom(ell: np.ndarray, theta: float) -> np.ndarray:
    """ln Π_{p<q} Γ(ℓ_p − ℓ_q + θ)/Γ(ℓ_p − ℓ_q)."""
    p, q = _pair_indices(ell.shape[-1], ell.shape[-1], strict=True)
    return _gamma_pair_sum(ell[..., p] - ell[..., q], theta, 0.0)


def log_interaction(upper: np.ndarray, lower: np.ndarray, theta: float) -> np.ndarray:
    """ln I(upper, lower) without the weight of the lower level."""
    n = lower.shape[-1]
    p, q = _pair_indices(n + 1, n + 1, strict=True)
    total = _gamma_pair_sum(upper[..., p] - upper[..., q], 1.0 - theta, 0.0)
    p, q = _pair_indices(n, n, strict=True)
    total = total + _gamma_pair_sum(lower[..., p] - lower[..., q], 1.0, theta)
    p, q = _pair_indices(n, n + 1, strict=True)
    total = total + _gamma_pair_sum(lower[..., p] - upper[..., q], 0.0, 1.0 - theta)
    p, q = _pair_indices(n, n, strict=False)
    total = total + _gamma_pair_sum(upper[..., p] - lower[..., q], theta, 1.0)
    return total


def log_weights_batch(spec: MeasureSpec, ell: Dict[int, np.ndarray]) -> np.ndarray:
    """
    Complex log-weights of many patterns at once.

    Args:
        spec: the measure
        ell: level j -> float array of shape (P, j) of shifted positions

    Returns:
        complex array of shape (P,)

    Raises:
        MeasureContractError: if any Gamma argument is nonpositive
    """
    theta, N, k = spec.theta, spec.N, spec.k
    try:
        total = log_top(ell[N], theta) + log_bottom(ell[k], theta) + 0j
        total = total + np.sum(spec.weight(N).log_value(ell[N]), axis=-1)
        for j in range(k, N):
            total = total + log_interaction(ell[j + 1], ell[j], theta)
            total = total + np.sum(spec.weight(j).log_value(ell[j]), axis=-1)
    except NumericsDomainError as exc:
        raise MeasureContractError(f"pattern breaks interlacing: {exc}") from exc
    return total


def log_weight(spec: MeasureSpec, pattern: CornersPattern) -> LogWeight:
    """Unnormalized log-weight of one pattern."""
    spec.check_pattern(pattern)
    ell = {j: shifted_positions(pattern.lam(j), spec.theta)[None, :] for j in range(spec.k, spec.N + 1)}
    return LogWeight.from_complex_log(log_weights_batch(spec, ell)[0])
