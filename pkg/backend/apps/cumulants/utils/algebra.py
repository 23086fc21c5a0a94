"""
Joint cumulants of random variables over an enumerated measure.

A random variable is an array whose last axis runs over the patterns of the
measure; leading axes broadcast, so a variable that also depends on a
quadrature node is simply a (nodes, P) array. Moments are dot products with
the probability vector and cumulants come from the Möbius sum over set
partitions

    M(X_J) = Σ_σ (−1)^{r−1} (r−1)! Π_{B∈σ} E[Π_{i∈B} X_i]

where r is the number of blocks of σ.
"""

import itertools
import logging
import math
from functools import lru_cache
from typing import Dict, FrozenSet, Mapping, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

MAX_VARIABLES = 6

SetPartition = Tuple[Tuple[int, ...], ...]


class CumulantError(Exception):
    """Raised for too many variables, mismatched shapes or an unusable observation setup."""
    pass


@lru_cache(maxsize=None)
def set_partitions(n: int) -> Tuple[SetPartition, ...]:
    """
    All set partitions of {0, …, n−1}, generated from restricted-growth strings.

    A string a with a[0] = 0 and a[i] ≤ max(a[:i]) + 1 puts i in block a[i].
    """
    if n < 0:
        raise CumulantError(f"cannot partition a set of size {n}")
    if n == 0:
        return ((),)

    partitions = []

    def grow(prefix, top):
        if len(prefix) == n:
            blocks = [[] for _ in range(top + 1)]
            for index, block in enumerate(prefix):
                blocks[block].append(index)
            partitions.append(tuple(tuple(block) for block in blocks))
            return
        for block in range(top + 2):
            grow(prefix + [block], max(top, block))

    grow([0], 0)
    return tuple(partitions)


def _probabilities(measure) -> np.ndarray:
    return np.asarray(getattr(measure, "probs", measure))


def _prepare(variables: Sequence, measure) -> Tuple[list, np.ndarray]:
    if not variables:
        raise CumulantError("need at least one random variable")
    if len(variables) > MAX_VARIABLES:
        raise CumulantError(f"at most {MAX_VARIABLES} variables, got {len(variables)}")
    probs = _probabilities(measure)
    arrays = [np.asarray(x) for x in variables]
    for x in arrays:
        if x.shape[-1:] != probs.shape:
            raise CumulantError(f"variable of shape {x.shape} does not run over {probs.size} patterns")
    return arrays, probs


def joint_moment(variables: Sequence, measure, block: Sequence[int] = None):
    """E[Π_{i∈block} X_i]; the whole list when ``block`` is None."""
    arrays, probs = _prepare(variables, measure)
    indices = range(len(arrays)) if block is None else block
    product = 1.0
    for i in indices:
        product = product * arrays[i]
    return np.asarray(product) @ probs


def cumulant_from_moments(variables: Sequence, measure):
    """
    Joint cumulant M(X_1, …, X_n) by the partition sum over exact moments.

    Args:
        variables: arrays with the pattern axis last, at most six of them
        measure: a PatternEnsemble or its probability vector

    Returns:
        a complex scalar, or an array over the broadcast leading axes

    Raises:
        CumulantError: on too many variables or a shape mismatch
    """
    arrays, probs = _prepare(variables, measure)
    moments: Dict[Tuple[int, ...], object] = {}
    total = 0.0
    for partition in set_partitions(len(arrays)):
        r = len(partition)
        term = (-1) ** (r - 1) * math.factorial(r - 1)
        for block in partition:
            if block not in moments:
                product = 1.0
                for i in block:
                    product = product * arrays[i]
                moments[block] = np.asarray(product) @ probs
            term = term * moments[block]
        total = total + term
    return total


def moment_from_cumulants(variables: Sequence, measure):
    """E[X_1⋯X_n] rebuilt as Σ_π Π_{B∈π} M(X_B)."""
    arrays, _ = _prepare(variables, measure)
    total = 0.0
    for partition in set_partitions(len(arrays)):
        term = 1.0
        for block in partition:
            term = term * cumulant_from_moments([arrays[i] for i in block], measure)
        total = total + term
    return total


def _subsets(n: int):
    for size in range(1, n + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(n), size))


def cumulant_table(moments: Mapping[FrozenSet[int], complex], n: int) -> Dict[FrozenSet[int], complex]:
    """Cumulants of every nonempty J ⊆ {0..n−1} from a table of joint moments."""
    table = {}
    for subset in _subsets(n):
        members = sorted(subset)
        total = 0j
        for partition in set_partitions(len(members)):
            r = len(partition)
            term = (-1) ** (r - 1) * math.factorial(r - 1)
            for block in partition:
                term *= moments[frozenset(members[i] for i in block)]
            total += term
        table[subset] = total
    return table


def moment_table(cumulants: Mapping[FrozenSet[int], complex], n: int) -> Dict[FrozenSet[int], complex]:
    """Joint moments of every nonempty J ⊆ {0..n−1} from a table of cumulants."""
    table = {}
    for subset in _subsets(n):
        members = sorted(subset)
        total = 0j
        for partition in set_partitions(len(members)):
            term = 1 + 0j
            for block in partition:
                term *= cumulants[frozenset(members[i] for i in block)]
            total += term
        table[subset] = total
    return table


def verify_product_formula(x, y, others: Sequence, measure) -> float:
    """
    |LHS − RHS| of

        M(XY, X_1..X_n) = M(X, Y, X_1..X_n) + Σ_{I⊆[n]} M(X; X_I)·M(Y; X_{I^c})
    """
    others = list(others)
    if len(others) + 2 > MAX_VARIABLES:
        raise CumulantError(f"product formula needs at most {MAX_VARIABLES - 2} extra variables")
    x, y = np.asarray(x), np.asarray(y)
    lhs = cumulant_from_moments([x * y] + others, measure)
    rhs = cumulant_from_moments([x, y] + others, measure)
    n = len(others)
    for size in range(n + 1):
        for chosen in itertools.combinations(range(n), size):
            rest = [others[i] for i in range(n) if i not in chosen]
            rhs = rhs + cumulant_from_moments([x] + [others[i] for i in chosen], measure) * cumulant_from_moments(
                [y] + rest, measure
            )
    residual = float(np.max(np.abs(lhs - rhs)))
    logger.debug(f"Product formula with {n} extra variables: residual {residual:.3e}")
    return residual
