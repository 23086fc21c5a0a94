"""
Log-Gamma evaluation used by every Gamma product in the lab.

Products of Gamma ratios are always assembled as sums of log-Gamma values and
exponentiated once by the caller.
"""

from typing import Iterable, Union

import numpy as np
from scipy.special import gammaln

ArrayLike = Union[float, np.ndarray]


class NumericsDomainError(Exception):
    """Raised when a log-Gamma argument is not strictly positive."""
    pass


class NumericsContractError(Exception):
    """Raised when a numeric primitive is called outside its contract."""
    pass


def log_gamma(x: ArrayLike) -> ArrayLike:
    """
    Natural log of the Gamma function for strictly positive arguments.

    Accepts a scalar or an array. A nonpositive argument means an interlacing
    precondition was broken upstream, so it is reported rather than continued.

    Raises:
        NumericsDomainError: if any argument is <= 0 or not finite
    """
    values = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        bad = values[~(np.isfinite(values) & (values > 0))] if values.ndim else values
        raise NumericsDomainError(f"log_gamma needs x > 0, got {np.ravel(bad)[:5]}")
    result = gammaln(values)
    if np.ndim(x) == 0:
        return float(result)
    return result


def log_gamma_ratio(numerators: Iterable[float], denominators: Iterable[float]) -> float:
    """Σ lnΓ(numerators) − Σ lnΓ(denominators)."""
    top = np.fromiter(numerators, dtype=float)
    bottom = np.fromiter(denominators, dtype=float)
    total = 0.0
    if top.size:
        total += float(np.sum(log_gamma(top)))
    if bottom.size:
        total -= float(np.sum(log_gamma(bottom)))
    return total
