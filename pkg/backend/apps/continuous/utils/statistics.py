"""
Joint cumulants of sample functionals with batch-means error bars.
"""

import logging
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from apps.cumulants.utils import cumulant_from_moments

from .sampler import SampleBatch
from .spec import ContinuousSpecError

logger = logging.getLogger(__name__)

DEFAULT_BATCHES = 20

Functional = Union[Callable[[SampleBatch], np.ndarray], np.ndarray]


def evaluate_functional(batch: SampleBatch, functional: Functional) -> np.ndarray:
    """Values of a functional on every sample; the sample axis is last."""
    values = functional(batch) if callable(functional) else functional
    values = np.asarray(values)
    if values.shape[-1:] != (len(batch),):
        raise ContinuousSpecError(f"functional of shape {values.shape} does not run over {len(batch)} samples")
    return values


def batch_spread(values: np.ndarray) -> np.ndarray:
    """Standard error of the mean of per-batch estimates along axis 0; complex values use |·|²."""
    count = values.shape[0]
    centred = values - values.mean(axis=0)
    variance = np.sum(np.abs(centred) ** 2, axis=0) / (count - 1)
    return np.sqrt(variance / count)


def estimate_cumulant(
    batch: SampleBatch,
    variables: Sequence[Functional],
    batches: int = DEFAULT_BATCHES,
) -> Tuple[Union[complex, np.ndarray], Union[float, np.ndarray]]:
    """
    Empirical joint cumulant κ(X_1, …, X_n) and its batch-means standard error.

    The value plugs the empirical joint moments of the whole batch into the
    moment-cumulant partition sum. The error comes from recomputing it on
    ``batches`` contiguous blocks of samples.

    Args:
        variables: arrays with the sample axis last, or callables of the batch;
            leading axes broadcast

    Raises:
        ContinuousSpecError: if fewer than 20 batches are requested
        CumulantError: on more than six variables
    """
    if batches < DEFAULT_BATCHES:
        raise ContinuousSpecError(f"batch means need at least {DEFAULT_BATCHES} batches, got {batches}")
    arrays = [evaluate_functional(batch, x) for x in variables]
    uniform = np.full(len(batch), 1.0 / len(batch))
    value = cumulant_from_moments(arrays, uniform)

    per_batch = []
    for block in batch.batch_slices(batches):
        size = block.stop - block.start
        per_batch.append(cumulant_from_moments([x[..., block] for x in arrays], np.full(size, 1.0 / size)))
    stderr = batch_spread(np.asarray(per_batch))

    if np.ndim(value) == 0:
        return complex(value), float(stderr)
    return np.asarray(value), np.asarray(stderr)
