"""
Single-site Metropolis sampler on interlaced patterns.

Proposals pick a level, a particle and a direction uniformly, so the proposal
kernel is symmetric and the acceptance is min(1, P(ℓ̃)/P(ℓ)) with the ratio
taken from the closed forms in ``ratios``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional

import numpy as np

from apps.numerics.utils import make_generator, spawn_generators
from apps.state_space.utils import CornersPattern, PatternKey

from .measure import MeasureSpec
from .ratios import RejectedMove, move_single_site, single_site_ratio
from .weights import MeasureContractError

logger = logging.getLogger(__name__)


def lowest_pattern(spec: MeasureSpec) -> CornersPattern:
    levels = tuple((0,) * j for j in range(spec.N, spec.k - 1, -1))
    return CornersPattern(spec.theta, spec.N, spec.k, spec.M, levels)


def acceptance_probability(spec: MeasureSpec, pattern: CornersPattern, j: int, i: int, direction: int) -> float:
    """min(1, ratio), or 0 for a move that leaves the state space."""
    try:
        ratio = single_site_ratio(spec, pattern, j, i, direction)
    except RejectedMove:
        return 0.0
    return min(1.0, float(ratio.real))


def proposal_probability(spec: MeasureSpec, j: int) -> float:
    """Probability of proposing one particular (level j, index, direction)."""
    return 1.0 / ((spec.N - spec.k + 1) * j * 2)


def mcmc_sample(
    spec: MeasureSpec,
    chain_length: int,
    burn_in: int = 0,
    seed: Optional[int] = None,
    start: Optional[CornersPattern] = None,
    rng: Optional[np.random.Generator] = None,
) -> Iterator[CornersPattern]:
    """
    Metropolis chain yielding ``chain_length`` states after ``burn_in``.

    Each step consumes exactly four uniforms, so a seed fixes the trajectory.

    Raises:
        MeasureContractError: if the measure is not a probability measure
    """
    if not spec.is_probability:
        raise MeasureContractError("MCMC needs strictly positive weights")
    rng = rng if rng is not None else make_generator(seed)
    state = start if start is not None else lowest_pattern(spec)
    spec.check_pattern(state)
    levels = spec.N - spec.k + 1
    accepted = 0

    for step in range(burn_in + chain_length):
        draws = rng.random(4)
        j = spec.k + min(int(draws[0] * levels), levels - 1)
        i = 1 + min(int(draws[1] * j), j - 1)
        direction = 1 if draws[2] < 0.5 else -1
        if draws[3] < acceptance_probability(spec, state, j, i, direction):
            state = move_single_site(state, j, i, direction)
            accepted += 1
        if step >= burn_in:
            yield state

    logger.debug(f"Chain finished: acceptance {accepted / max(1, burn_in + chain_length):.3f}")


def _run_chain(spec, chain_length, burn_in, thin, rng) -> List[PatternKey]:
    return [
        state.key
        for n, state in enumerate(mcmc_sample(spec, chain_length, burn_in, rng=rng))
        if n % thin == 0
    ]


def run_chains(
    spec: MeasureSpec,
    chains: int,
    chain_length: int,
    burn_in: int = 0,
    seed: Optional[int] = None,
    thin: int = 1,
    threads: int = 1,
) -> List[List[PatternKey]]:
    """Independent chains, each on its own spawned generator."""
    generators = spawn_generators(seed, chains)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_run_chain, spec, chain_length, burn_in, thin, g) for g in generators]
        return [future.result() for future in futures]


def empirical_frequencies(samples) -> Dict[PatternKey, float]:
    counts: Dict[PatternKey, int] = {}
    total = 0
    for key in samples:
        counts[key] = counts.get(key, 0) + 1
        total += 1
    return {key: count / total for key, count in counts.items()}
