"""
Closed-form probability ratios P(ℓ̃)/P(ℓ) for coordinate moves.

Every factor comes from the functional equation Γ(x+1) = xΓ(x), so the
ratios are finite products of linear terms. Moves are checked on integer λ's
first; a move that leaves the state space raises RejectedMove.
"""

import cmath
from dataclasses import dataclass
from typing import Sequence

from apps.state_space.utils import CornersPattern

from .measure import MeasureSpec
from .weights import MeasureContractError


class RejectedMove(Exception):
    """Raised when a proposed move leaves the interlaced state space."""
    pass


@dataclass(frozen=True)
class HorizontalMove:
    """Shift λʲᵢ by ``direction`` on levels j₂ ≤ j ≤ j₁, all sharing the same value."""
    i: int
    j1: int
    j2: int
    direction: int = -1

    def inverse(self) -> "HorizontalMove":
        return HorizontalMove(self.i, self.j1, self.j2, -self.direction)

    def index_at(self, j: int) -> int:
        return self.i


@dataclass(frozen=True)
class DiagonalMove:
    """Shift λᵐ_{i+m−j₂} by ``direction`` on levels j₂ ≤ m ≤ j₁ along a staircase of equal values."""
    i: int
    j1: int
    j2: int
    direction: int = -1

    def inverse(self) -> "DiagonalMove":
        return DiagonalMove(self.i, self.j1, self.j2, -self.direction)

    def index_at(self, j: int) -> int:
        return self.i + j - self.j2


def _prod(values) -> complex:
    result = 1.0 + 0j
    for value in values:
        result *= value
    return result


def _ell(pattern: CornersPattern, theta: float, j: int) -> Sequence[float]:
    return [lam - (p + 1) * theta for p, lam in enumerate(pattern.lam(j))]


def _weight_step(spec: MeasureSpec, j: int, s: float) -> complex:
    weight = spec.weight(j)
    return complex(weight.log_value([s - 1.0])[0] - weight.log_value([s])[0])


def apply_move(pattern: CornersPattern, move) -> CornersPattern:
    """
    The pattern after ``move``.

    Raises:
        MeasureContractError: if the move's equal-value precondition fails
        RejectedMove: if the result is not interlaced
    """
    if not (pattern.k <= move.j2 <= move.j1 <= pattern.N) or not 1 <= move.i <= move.j2:
        raise MeasureContractError(f"{move} does not fit dims N={pattern.N}, k={pattern.k}")
    if move.direction not in (1, -1):
        raise MeasureContractError(f"move direction must be ±1, got {move.direction}")
    anchor = pattern.lam(move.j2)[move.i - 1]
    changes = {}
    for j in range(move.j2, move.j1 + 1):
        index = move.index_at(j)
        parts = list(pattern.lam(j))
        if parts[index - 1] != anchor:
            raise MeasureContractError(f"{move} needs equal parts, level {j} differs")
        parts[index - 1] += move.direction
        changes[j] = parts
    moved = pattern.replace_levels(changes)
    if not moved.is_valid():
        raise RejectedMove(f"{move} leaves the state space")
    return moved


def _horizontal_ratio(spec: MeasureSpec, pattern: CornersPattern, move: HorizontalMove) -> complex:
    theta, N, k = spec.theta, spec.N, spec.k
    i, j1, j2 = move.i, move.j1, move.j2
    s = pattern.lam(j2)[i - 1] - i * theta
    log_w = sum(_weight_step(spec, j, s) for j in range(j2, j1 + 1))
    ratio = cmath.exp(log_w)

    top = _ell(pattern, theta, j1)
    others = [x for p, x in enumerate(top) if p != i - 1]
    if j1 == N:
        ratio *= _prod((s - x - theta) / (s - x) for x in others)
    else:
        ratio *= _prod((s - x + theta - 1) / (s - x) for x in others)
        ratio *= _prod((s - x - theta) / (s - x - 1) for x in _ell(pattern, theta, j1 + 1))

    bottom = _ell(pattern, theta, j2)
    others = [x for p, x in enumerate(bottom) if p != i - 1]
    if j2 == k:
        ratio *= _prod((s - x - 1) / (s - x + theta - 1) for x in others)
    else:
        ratio *= _prod((s - x - 1) / (s - x - theta) for x in others)
        ratio *= _prod((s - x) / (s - x + theta - 1) for x in _ell(pattern, theta, j2 - 1))
    return ratio


def _diagonal_ratio(spec: MeasureSpec, pattern: CornersPattern, move: DiagonalMove) -> complex:
    theta, N, k = spec.theta, spec.N, spec.k
    i, j1, j2 = move.i, move.j1, move.j2
    s = pattern.lam(j2)[i - 1] - i * theta
    depth = j1 - j2
    log_w = sum(_weight_step(spec, j, s - theta * (j - j2)) for j in range(j2, j1 + 1))
    ratio = cmath.exp(log_w)

    sigma = s - theta * depth
    top = _ell(pattern, theta, j1)
    others = [x for p, x in enumerate(top) if p != i + depth - 1]
    if j1 == N:
        ratio *= _prod((sigma - x - 1) / (sigma - x + theta - 1) for x in others)
    else:
        ratio *= _prod((sigma - x - 1) / (sigma - x - theta) for x in others)
        ratio *= _prod((sigma - x - theta) / (sigma - x - 1) for x in _ell(pattern, theta, j1 + 1))

    bottom = _ell(pattern, theta, j2)
    others = [x for p, x in enumerate(bottom) if p != i - 1]
    if j2 == k:
        ratio *= _prod((s - x - theta) / (s - x) for x in others)
    else:
        ratio *= _prod((s - x + theta - 1) / (s - x) for x in others)
        ratio *= _prod((s - x) / (s - x + theta - 1) for x in _ell(pattern, theta, j2 - 1))
    return ratio


def shift_ratio(spec: MeasureSpec, pattern: CornersPattern, move) -> complex:
    """
    P(ℓ̃)/P(ℓ) for a horizontal or diagonal move, where ℓ̃ = apply_move(ℓ, move).
    Raising moves are the reciprocal of lowering back from ℓ̃.

    The top factor depends on whether j₁ = N and the bottom factor on whether
    j₂ = k, which selects one of four closed forms per move type.

    Raises:
        MeasureContractError: if the move's precondition fails
        RejectedMove: if the moved pattern is not interlaced
    """
    spec.check_pattern(pattern)
    moved = apply_move(pattern, move)
    if move.direction == 1:
        return 1.0 / shift_ratio(spec, moved, move.inverse())
    if isinstance(move, HorizontalMove):
        return _horizontal_ratio(spec, pattern, move)
    if isinstance(move, DiagonalMove):
        return _diagonal_ratio(spec, pattern, move)
    raise MeasureContractError(f"unknown move type {type(move).__name__}")


def _top_factor(ell, i, s, theta):
    # Hᵗ
    before = _prod((s - x - 1) / (s - x + theta - 1) for x in ell[:i - 1])
    after = _prod((s - x - theta) / (s - x) for x in ell[i:])
    return before * after


def _bottom_factor(ell, i, s, theta):
    # Hᵇ
    before = _prod((s - x - theta) / (s - x) for x in ell[:i - 1])
    after = _prod((s - x - 1) / (s - x + theta - 1) for x in ell[i:])
    return before * after


def _upper_factor(upper, lower, i, s, theta):
    # I(ℓʲ, ℓʲ⁻¹) with ℓʲ as the moving upper row
    before = _prod((s - x + theta - 1) / (s - x) for x in upper[:i - 1])
    after = _prod((s - x - 1) / (s - x - theta) for x in upper[i:])
    cross = _prod((s - x) / (s - x + theta - 1) for x in lower)
    return before * after * cross


def _lower_factor(upper, lower, i, s, theta):
    # I(ℓʲ⁺¹, ℓʲ) with ℓʲ as the moving lower row, weight excluded
    before = _prod((s - x - 1) / (s - x - theta) for x in lower[:i - 1])
    after = _prod((s - x + theta - 1) / (s - x) for x in lower[i:])
    cross = _prod((s - x - theta) / (s - x - 1) for x in upper)
    return before * after * cross


def _lowering_ratio(spec: MeasureSpec, pattern: CornersPattern, j: int, i: int) -> complex:
    theta = spec.theta
    row = _ell(pattern, theta, j)
    s = row[i - 1]
    ratio = cmath.exp(_weight_step(spec, j, s))
    if j == spec.N:
        ratio *= _top_factor(row, i, s, theta)
    else:
        ratio *= _lower_factor(_ell(pattern, theta, j + 1), row, i, s, theta)
    if j == spec.k:
        ratio *= _bottom_factor(row, i, s, theta)
    else:
        ratio *= _upper_factor(row, _ell(pattern, theta, j - 1), i, s, theta)
    return ratio


def move_single_site(pattern: CornersPattern, j: int, i: int, direction: int) -> CornersPattern:
    if direction not in (1, -1):
        raise MeasureContractError(f"direction must be ±1, got {direction}")
    if not (pattern.k <= j <= pattern.N and 1 <= i <= j):
        raise MeasureContractError(f"site ({j}, {i}) outside the pattern")
    parts = list(pattern.lam(j))
    parts[i - 1] += direction
    moved = pattern.replace_levels({j: parts})
    if not moved.is_valid():
        raise RejectedMove(f"moving λ^{j}_{i} by {direction:+d} leaves the state space")
    return moved


def single_site_ratio(spec: MeasureSpec, pattern: CornersPattern, j: int, i: int, direction: int) -> complex:
    """
    P(ℓ̃)/P(ℓ) for ℓʲᵢ → ℓʲᵢ ± 1.

    Raising a site is the reciprocal of lowering it back from the raised pattern.

    Raises:
        RejectedMove: if the moved pattern is not interlaced
    """
    spec.check_pattern(pattern)
    moved = move_single_site(pattern, j, i, direction)
    if direction == -1:
        return _lowering_ratio(spec, pattern, j, i)
    return 1.0 / _lowering_ratio(spec, moved, j, i)
