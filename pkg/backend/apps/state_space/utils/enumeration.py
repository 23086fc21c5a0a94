"""
Streaming enumeration of Λᴹₙ and of interlaced corner patterns.

Order is lexicographic on the concatenation (λᴺ, λᴺ⁻¹, …, λᵏ), which keeps
expectation sums reproducible bit-for-bit.
"""

import itertools
from math import comb
from typing import Iterator, Tuple

from .patterns import CornersPattern, PatternKey, Signature, StateSpaceContractError


def _descending_tuples(n: int, upper: int) -> Iterator[Tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for first in range(upper + 1):
        for rest in _descending_tuples(n - 1, first):
            yield (first,) + rest


def enumerate_signatures(n: int, M: int) -> Iterator[Signature]:
    """Every element of Λᴹₙ once, in lexicographic order."""
    if n < 1:
        raise StateSpaceContractError(f"signature length must be >= 1, got {n}")
    for parts in _descending_tuples(n, M):
        yield Signature(parts, M)


def signature_count(n: int, M: int) -> int:
    return comb(M + n, n)


def interlacing_children(upper: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
    """All μ with upper ⪰ μ, in lexicographic order."""
    ranges = [range(upper[i + 1], upper[i] + 1) for i in range(len(upper) - 1)]
    return itertools.product(*ranges)


def _completions(level: Tuple[int, ...], depth: int) -> Iterator[PatternKey]:
    if depth == 0:
        yield (level,)
        return
    for child in interlacing_children(level):
        for tail in _completions(child, depth - 1):
            yield (level,) + tail


def enumerate_pattern_keys(N: int, k: int, M: int) -> Iterator[PatternKey]:
    """Integer keys (top level first) of every pattern in the state space."""
    if not 1 <= k <= N:
        raise StateSpaceContractError(f"need 1 <= k <= N, got k={k}, N={N}")
    for top in _descending_tuples(N, M):
        yield from _completions(top, N - k)


def enumerate_patterns(theta: float, N: int, k: int, M: int) -> Iterator[CornersPattern]:
    for key in enumerate_pattern_keys(N, k, M):
        yield CornersPattern(theta, N, k, M, key)


def completion_count(top: Tuple[int, ...], k: int) -> int:
    """Number of ways to complete ``top`` down to level k."""
    depth = len(top) - k
    counts = {top: 1}
    for _ in range(depth):
        following = {}
        for level, count in counts.items():
            for child in interlacing_children(level):
                following[child] = following.get(child, 0) + count
        counts = following
    return sum(counts.values())


def pattern_count(N: int, k: int, M: int) -> int:
    return sum(completion_count(top, k) for top in _descending_tuples(N, M))
