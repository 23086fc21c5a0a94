"""
Signatures, θ-shifted levels and interlaced corner patterns.

Patterns store integer λ's only; the shifted positions ℓᵢ = λᵢ − i·θ are
derived on demand, so membership and equality questions never touch floats.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

PatternKey = Tuple[Tuple[int, ...], ...]


class StateSpaceContractError(Exception):
    """Raised when signatures or patterns are used outside their contract."""
    pass


@dataclass(frozen=True)
class Signature:
    """A weakly decreasing vector of integers in [0, cap]."""
    parts: Tuple[int, ...]
    cap: int

    def __post_init__(self):
        parts = tuple(int(part) for part in self.parts)
        object.__setattr__(self, "parts", parts)
        if any(part < 0 or part > self.cap for part in parts):
            raise StateSpaceContractError(f"parts {parts} leave [0, {self.cap}]")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise StateSpaceContractError(f"parts {parts} are not weakly decreasing")

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, index):
        return self.parts[index]

    def shifted(self, theta: float) -> "ShiftedLevel":
        return ShiftedLevel(theta=theta, signature=self)


@dataclass(frozen=True)
class ShiftedLevel:
    theta: float
    signature: Signature

    @property
    def positions(self) -> np.ndarray:
        return shifted_positions(self.signature.parts, self.theta)


def shifted_positions(parts: Sequence[int], theta: float) -> np.ndarray:
    """ℓᵢ = λᵢ − i·θ with 1-based i."""
    return np.asarray(parts, dtype=float) - theta * np.arange(1, len(parts) + 1)


def _parts(level) -> Tuple[int, ...]:
    return level.parts if isinstance(level, Signature) else tuple(level)


def interlaces(upper, lower) -> bool:
    """
    True iff upper ⪰ lower, i.e. λ₁ ≥ μ₁ ≥ λ₂ ≥ μ₂ ≥ … ≥ μₙ ≥ λₙ₊₁.

    Raises:
        StateSpaceContractError: if len(upper) != len(lower) + 1
    """
    lam, mu = _parts(upper), _parts(lower)
    if len(lam) != len(mu) + 1:
        raise StateSpaceContractError(
            f"interlacing needs lengths n+1 and n, got {len(lam)} and {len(mu)}"
        )
    return all(lam[i] >= mu[i] >= lam[i + 1] for i in range(len(mu)))


@dataclass(frozen=True)
class CornersPattern:
    """
    An interlaced stack λᴺ ⪰ λᴺ⁻¹ ⪰ … ⪰ λᵏ; ``levels`` runs from the top level N down to k.
    """
    theta: float
    N: int
    k: int
    M: int
    levels: PatternKey

    def __post_init__(self):
        if not 1 <= self.k <= self.N:
            raise StateSpaceContractError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        levels = tuple(tuple(int(x) for x in level) for level in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) != self.N - self.k + 1:
            raise StateSpaceContractError("pattern must hold one signature per level k..N")
        for offset, level in enumerate(levels):
            if len(level) != self.N - offset:
                raise StateSpaceContractError(f"level {self.N - offset} must have {self.N - offset} parts")

    @classmethod
    def from_key(cls, theta: float, N: int, k: int, M: int, key: PatternKey) -> "CornersPattern":
        return cls(theta=theta, N=N, k=k, M=M, levels=key)

    @property
    def key(self) -> PatternKey:
        return self.levels

    def lam(self, j: int) -> Tuple[int, ...]:
        if not self.k <= j <= self.N:
            raise StateSpaceContractError(f"level {j} outside [{self.k}, {self.N}]")
        return self.levels[self.N - j]

    def ell(self, j: int) -> np.ndarray:
        return shifted_positions(self.lam(j), self.theta)

    def signature(self, j: int) -> Signature:
        return Signature(self.lam(j), self.M)

    def replace_levels(self, changes: dict) -> "CornersPattern":
        """New pattern with ``changes[j]`` substituted for level j (not validated)."""
        levels = list(self.levels)
        for j, parts in changes.items():
            levels[self.N - j] = tuple(parts)
        return CornersPattern(self.theta, self.N, self.k, self.M, tuple(levels))

    def is_valid(self) -> bool:
        for level in self.levels:
            if any(x < 0 or x > self.M for x in level):
                return False
            if any(level[i] < level[i + 1] for i in range(len(level) - 1)):
                return False
        return all(interlaces(self.levels[t], self.levels[t + 1]) for t in range(len(self.levels) - 1))
