"""
Principal and one-variable specializations of Jack polynomials.

J is the P-normalization fixed by J_λ(1ᴺ) = Πᵢ Γ(θ)/Γ(iθ) · Π_{i<j} Γ(ℓᵢ−ℓⱼ+θ)/Γ(ℓᵢ−ℓⱼ)
with ℓᵢ = λᵢ − iθ; monomial cases such as J_{(1)} = x₁ + x₂ pin it down.
"""

import math
from typing import Sequence

import numpy as np

from apps.numerics.utils import log_gamma
from apps.state_space.utils import interlaces, shifted_positions

from .partitions import Partition


def as_partition(value) -> Partition:
    return value if isinstance(value, Partition) else Partition.of(value)


def _pair_diffs(ell: np.ndarray, strict: bool = True) -> np.ndarray:
    p, q = np.triu_indices(len(ell), 1 if strict else 0)
    return ell[p] - ell[q]


def _sum_log_ratio(args: np.ndarray, num: float, den: float) -> float:
    if args.size == 0:
        return 0.0
    return float(np.sum(log_gamma(args + num) - log_gamma(args + den)))


def log_jack_principal(lam, N: int, theta: float) -> float:
    """ln J_λ(1ᴺ); −inf when λ has more than N parts."""
    lam = as_partition(lam)
    if len(lam) > N:
        return -math.inf
    ell = shifted_positions(lam.padded(N), theta)
    levels = np.arange(1, N + 1) * theta
    total = N * log_gamma(theta) - float(np.sum(log_gamma(levels)))
    return total + _sum_log_ratio(_pair_diffs(ell), theta, 0.0)


def jack_principal(lam, N: int, theta: float) -> float:
    """J_λ(1ᴺ), zero when λ is longer than N."""
    return math.exp(log_jack_principal(lam, N, theta))


def skew_jack_one(lam: Sequence[int], mu: Sequence[int], theta: float) -> float:
    """
    J_{λ/μ}(1) for λ with n parts and μ with n − 1 parts (zeros included).

    Zero unless λ ⪰ μ. The bare Gamma product equals Γ(θ)ⁿ⁻¹ at λ = μ = 0;
    dividing it out gives J_{∅/∅}(1) = 1, the normalization under which the
    branching rule reproduces J_λ(1ᴺ).
    """
    lam, mu = tuple(lam), tuple(mu)
    if not interlaces(lam, mu):
        return 0.0
    ell = shifted_positions(lam, theta)
    m = shifted_positions(mu, theta)
    n = len(lam)
    total = -(n - 1) * float(log_gamma(theta))
    total += _sum_log_ratio(_pair_diffs(ell), 1.0 - theta, 0.0)
    total += _sum_log_ratio(_pair_diffs(m), 1.0, theta)
    p, q = np.triu_indices(n, 1)
    total += _sum_log_ratio(m[p] - ell[q], 0.0, 1.0 - theta)
    p, q = np.triu_indices(n - 1, 0)
    total += _sum_log_ratio(ell[p] - m[q], theta, 1.0)
    return math.exp(total)


def dual_correction(lam, theta: float) -> float:
    """Π over boxes of (a + θl + θ)/(a + θl + 1)."""
    lam = as_partition(lam)
    conjugate = lam.conjugate().parts
    value = 1.0
    for i, j in lam.boxes():
        arm = lam.parts[i - 1] - j
        leg = conjugate[j - 1] - i
        value *= (arm + theta * leg + theta) / (arm + theta * leg + 1.0)
    return value


def log_dual_jack_principal(lam, N: int, theta: float) -> float:
    lam = as_partition(lam)
    if len(lam) > N:
        return -math.inf
    ell = shifted_positions(lam.padded(N), theta)
    total = -float(np.sum(log_gamma(np.arange(1, N + 1) * theta)))
    total += _sum_log_ratio(_pair_diffs(ell), 1.0, 1.0 - theta)
    total += _sum_log_ratio(ell + theta * N, theta, 1.0)
    return total


def dual_jack_principal(lam, N: int, theta: float) -> float:
    """J̃_λ(1ᴺ) from the closed Gamma form."""
    return math.exp(log_dual_jack_principal(lam, N, theta))


def weyl_dimension(lam, N: int) -> float:
    """Π_{i<j} (λᵢ − λⱼ + j − i)/(j − i), the θ = 1 value of J_λ(1ᴺ)."""
    parts = as_partition(lam).padded(N)
    value = 1.0
    for i in range(N):
        for j in range(i + 1, N):
            value *= (parts[i] - parts[j] + j - i) / (j - i)
    return value
