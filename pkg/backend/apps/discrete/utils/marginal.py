"""
Marginals of the k = 1 measure on the upper stack (ℓᴺ, …, ℓᵐ).
"""

from typing import Dict

from apps.state_space.utils import PatternKey

from .ensemble import build_ensemble
from .measure import MeasureSpec
from .weights import MeasureContractError


def marginal_measure(spec: MeasureSpec, m: int) -> Dict[PatternKey, float]:
    """
    Sum out levels 1..m−1 of a k = 1 measure.

    Returns:
        table keyed by the upper stack (λᴺ, …, λᵐ), top level first
    """
    if spec.k != 1:
        raise MeasureContractError(f"marginal_measure needs k = 1, got k = {spec.k}")
    if not 1 <= m <= spec.N:
        raise MeasureContractError(f"target level {m} outside [1, {spec.N}]")
    ensemble = build_ensemble(spec)
    depth = spec.N - m + 1
    table: Dict[PatternKey, float] = {}
    for key, prob in zip(ensemble.keys, ensemble.probs):
        upper = key[:depth]
        table[upper] = table.get(upper, 0.0) + prob
    return table


def measure_table(spec: MeasureSpec) -> Dict[PatternKey, float]:
    ensemble = build_ensemble(spec)
    return dict(zip(ensemble.keys, ensemble.probs))


def total_variation(first: Dict[PatternKey, float], second: Dict[PatternKey, float]) -> float:
    keys = set(first) | set(second)
    return 0.5 * sum(abs(first.get(key, 0.0) - second.get(key, 0.0)) for key in keys)
