"""
Numerical checks of the branching rule and of the Cauchy identity.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from apps.state_space.utils import enumerate_signatures, interlacing_children, signature_count

from .partitions import Partition
from .specializations import (
    as_partition,
    jack_principal,
    log_dual_jack_principal,
    log_jack_principal,
    skew_jack_one,
)

logger = logging.getLogger(__name__)

ROUNDING_ALLOWANCE = 1e4


class JackContractError(Exception):
    """Raised when an identity check is called with parameters outside its range."""
    pass


@dataclass
class BranchingCheck:
    value: float
    chain_sum: float
    chain_count: int
    residual: float


@dataclass
class CauchyCheck:
    truncated_sum: float
    target: float
    residual: float
    tail_bound: float
    terms: int

    @property
    def passed(self) -> bool:
        return self.residual <= self.tail_bound


def verify_branching(lam, N: int, theta: float) -> BranchingCheck:
    """
    Compare J_λ(1ᴺ) with the sum over interlacing chains of products of
    one-variable skew specializations.

    Chains are summed level by level: each partial chain ending in μ carries
    the accumulated product, so the cost is the number of distinct levels,
    not the number of chains.
    """
    lam = as_partition(lam)
    if not lam.parts:
        return BranchingCheck(value=1.0, chain_sum=1.0, chain_count=1, residual=0.0)
    value = jack_principal(lam, N, theta)
    if len(lam) > N:
        return BranchingCheck(value=0.0, chain_sum=0.0, chain_count=0, residual=0.0)

    partial = {lam.padded(N): (1.0, 1)}
    for _ in range(N - 1):
        following = {}
        for upper, (weight, count) in partial.items():
            for child in interlacing_children(upper):
                factor = skew_jack_one(upper, child, theta)
                previous_weight, previous_count = following.get(child, (0.0, 0))
                following[child] = (previous_weight + weight * factor, previous_count + count)
        partial = following

    # J_{(m)}(x) = xᵐ in one variable
    chain_sum = math.fsum(weight for weight, _ in partial.values())
    chain_count = sum(count for _, count in partial.values())
    residual = abs(value - chain_sum) / value if value else abs(chain_sum)
    logger.debug(f"Branching λ={lam.parts}, N={N}, θ={theta}: {chain_count} chains, residual {residual:.2e}")
    return BranchingCheck(value=value, chain_sum=chain_sum, chain_count=chain_count, residual=residual)


def cauchy_shells(N: int, theta: float, q: float, truncation: int) -> np.ndarray:
    """S_m = Σ_{λ₁ = m} q^{|λ|} J_λ(1ᴺ) J̃_λ(1ᴺ) for m = 0..T."""
    shells = [[] for _ in range(truncation + 1)]
    for signature in enumerate_signatures(N, truncation):
        parts = signature.parts
        size = sum(parts)
        if q == 0:
            term = 1.0 if size == 0 else 0.0
        else:
            term = math.exp(
                size * math.log(q)
                + log_jack_principal(Partition(parts), N, theta)
                + log_dual_jack_principal(Partition(parts), N, theta)
            )
        shells[parts[0]].append(term)
    return np.array([math.fsum(shell) for shell in shells])


def verify_cauchy(N: int, theta: float, q: float, truncation: int) -> CauchyCheck:
    """
    Truncated Cauchy sum over λ ⊆ (Tᴺ) against (1 − q)^{−θN²}.

    The tail beyond λ₁ = T is bounded geometrically from the last shell with
    ratio max(S_T/S_{T−1}, q); a rounding allowance proportional to the sum is
    added to the bound.
    """
    if not 0 <= q < 1:
        raise JackContractError(f"q must lie in [0, 1), got {q}")
    shells = cauchy_shells(N, theta, q, truncation)
    truncated = math.fsum(shells)
    target = (1.0 - q) ** (-theta * N * N)
    residual = abs(truncated - target)

    tail = 0.0
    if truncation >= 1 and shells[-1] > 0 and shells[-2] > 0:
        ratio = max(shells[-1] / shells[-2], q)
        tail = shells[-1] * ratio / (1.0 - ratio) if ratio < 1 else math.inf
    tail_bound = tail + ROUNDING_ALLOWANCE * np.finfo(float).eps * truncated
    logger.debug(f"Cauchy N={N}, θ={theta}, q={q}, T={truncation}: residual {residual:.2e}, bound {tail_bound:.2e}")
    return CauchyCheck(
        truncated_sum=truncated,
        target=target,
        residual=residual,
        tail_bound=tail_bound,
        terms=signature_count(N, truncation),
    )
