"""
Mixed first-order partial derivatives at the origin by central differences.
"""

import itertools
from typing import Callable, Sequence

import numpy as np

from .special import NumericsContractError

DEFAULT_STEP = 1e-3


def _central_difference(f: Callable, order_per_axis: Sequence[int], step: float) -> complex:
    axes = [axis for axis, order in enumerate(order_per_axis) if order]
    total = 0j
    for signs in itertools.product((1, -1), repeat=len(axes)):
        point = np.zeros(len(order_per_axis))
        point[axes] = np.asarray(signs, dtype=float) * step
        total += np.prod(signs) * complex(f(tuple(point)))
    return total / (2.0 * step) ** len(axes)


def mixed_partial(
    f: Callable[[tuple], complex],
    order_per_axis: Sequence[int],
    step: float = DEFAULT_STEP,
) -> complex:
    """
    Estimate ∂^m f / ∂t_a ... ∂t_b at t = 0 for the axes flagged with 1.

    One Richardson step combines the stencils at h and h/2, removing the h²
    term of the central difference.

    Raises:
        NumericsContractError: orders other than 0/1 or total order above 4
    """
    if any(order not in (0, 1) for order in order_per_axis):
        raise NumericsContractError("order_per_axis entries must be 0 or 1")
    if sum(order_per_axis) > 4:
        raise NumericsContractError("total differentiation order is capped at 4")
    if step <= 0:
        raise NumericsContractError("step must be positive")
    if not any(order_per_axis):
        return complex(f(tuple(np.zeros(len(order_per_axis)))))

    coarse = _central_difference(f, order_per_axis, step)
    fine = _central_difference(f, order_per_axis, step / 2.0)
    return (4.0 * fine - coarse) / 3.0
