"""
Seeded, splittable random generators.

Every stochastic routine takes an explicit seed or Generator; nothing draws
from global state.
"""

from typing import List, Optional

import numpy as np


def make_generator(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def spawn_generators(seed: Optional[int], count: int) -> List[np.random.Generator]:
    """Independent child streams for parallel chains."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]
