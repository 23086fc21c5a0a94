"""
Stieltjes transforms of the level measures and the deformed measure

    P^{t,v}(ℓ) ∝ P(ℓ) · Π_j Π_{r≤j} Π_i (1 + t^j_i / (v^j_i − ℓ^j_r/L))

whose mixed t-derivatives at t = 0 are joint cumulants with the G^j_L(v^j_i).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from apps.discrete.utils import REFUSAL_THRESHOLD, MeasureSpec, PatternEnsemble, build_ensemble
from apps.numerics.utils import mixed_partial
from apps.state_space.utils import CornersPattern

from .algebra import CumulantError, cumulant_from_moments

logger = logging.getLogger(__name__)

PointKey = Tuple[int, int]

VANISHING_TOL = 1e-12


class DeformationRefused(Exception):
    """Raised when the deformed partition function is too small to normalize by."""

    def __init__(self, message: str, modulus: float = 0.0):
        super().__init__(message)
        self.modulus = modulus


def stieltjes(pattern: CornersPattern, level: int, L: float, z: complex) -> complex:
    """G^n_L(z) = Σ_i 1/(z − ℓ^n_i/L) for one pattern."""
    return complex(np.sum(1.0 / (complex(z) - pattern.ell(level) / L)))


def stieltjes_values(ensemble: PatternEnsemble, level: int, L: float, z: complex) -> np.ndarray:
    """G^n_L(z) for every pattern of the ensemble, shape (P,)."""
    return np.sum(1.0 / (complex(z) - ensemble.ell[level] / L), axis=1)


@dataclass(frozen=True)
class ObservableSet:
    """
    Scale L and the observation points v^r_f, stored as ((r, (v_1, …, v_m)), …).

    Point indices f are 1-based, so ``point(r, 1)`` is the first point on level r.
    """
    L: float
    points: Tuple[Tuple[int, Tuple[complex, ...]], ...] = ()

    def __post_init__(self):
        if self.L <= 0:
            raise CumulantError(f"scale L must be positive, got {self.L}")
        normalized = tuple(
            sorted((int(r), tuple(complex(v) for v in values)) for r, values in dict(self.points).items())
        )
        object.__setattr__(self, "points", normalized)

    @classmethod
    def from_mapping(cls, L: float, points: Mapping[int, Tuple[complex, ...]]) -> "ObservableSet":
        return cls(L, tuple(points.items()))

    def count(self, level: int) -> int:
        return len(dict(self.points).get(level, ()))

    @property
    def total(self) -> int:
        return sum(len(values) for _, values in self.points)

    def point(self, level: int, index: int) -> complex:
        return dict(self.points)[level][index - 1]

    def items(self) -> Iterator[Tuple[int, int, complex]]:
        """(r, f, v^r_f) in level order."""
        for level, values in self.points:
            for index, value in enumerate(values, start=1):
                yield level, index, value

    def validate(self, spec: MeasureSpec):
        for level, _ in self.points:
            if not spec.k <= level <= spec.N:
                raise CumulantError(f"observation level {level} outside [{spec.k}, {spec.N}]")
        left, right = -spec.N * spec.theta, spec.M - spec.theta
        for level, index, v in self.items():
            scaled = self.L * v
            if scaled.imag == 0 and left <= scaled.real <= right:
                raise CumulantError(f"L·v^{level}_{index} = {scaled:.6g} lies on the particle range")

    def describe(self) -> dict:
        return {"L": self.L, "points": {str(level): list(values) for level, values in self.points}}


@dataclass(frozen=True)
class CumulantKey:
    """
    Which G^r_L(v^r_f) join the cumulant: ``subsets[r - k]`` lists the chosen f's.
    """
    k: int
    subsets: Tuple[Tuple[int, ...], ...]
    extra: Optional[str] = field(default=None)

    def chosen(self) -> Iterator[PointKey]:
        for offset, subset in enumerate(self.subsets):
            for index in subset:
                yield self.k + offset, index

    def is_full(self, level: int, obs: ObservableSet) -> bool:
        return len(self.subsets[level - self.k]) == obs.count(level)

    def complement(self, level: int, obs: ObservableSet) -> Tuple[int, ...]:
        chosen = set(self.subsets[level - self.k])
        return tuple(f for f in range(1, obs.count(level) + 1) if f not in chosen)

    @property
    def label(self) -> str:
        parts = ",".join("{" + ",".join(str(f) for f in subset) + "}" for subset in self.subsets)
        return f"{self.extra}; {parts}" if self.extra else parts


def stieltjes_variables(ensemble: PatternEnsemble, obs: ObservableSet) -> Dict[PointKey, np.ndarray]:
    """G^r_L(v^r_f) as random variables over the ensemble."""
    return {(level, index): stieltjes_values(ensemble, level, obs.L, v) for level, index, v in obs.items()}


def _observable_values(ensemble: PatternEnsemble, observable) -> np.ndarray:
    if callable(observable):
        return np.fromiter((observable(p) for p in ensemble.patterns()), dtype=complex, count=len(ensemble))
    values = np.asarray(observable, dtype=complex)
    if values.shape != (len(ensemble),):
        raise CumulantError(f"observable array must have shape ({len(ensemble)},), got {values.shape}")
    return values


def deformation_factors(ensemble: PatternEnsemble, obs: ObservableSet, t: Mapping[PointKey, complex]) -> np.ndarray:
    factors, _ = _factors_and_vanishing(ensemble, obs, t)
    return factors


def _factors_and_vanishing(
    ensemble: PatternEnsemble, obs: ObservableSet, t: Mapping[PointKey, complex]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    The per-pattern factors and a mask of patterns where some particle term
    1 + t/(v − x/L) vanishes up to rounding, relative to max(1, |t/(v − x/L)|).
    """
    factors = np.ones(len(ensemble), dtype=complex)
    vanishing = np.zeros(len(ensemble), dtype=bool)
    for level, index, v in obs.items():
        strength = complex(t.get((level, index), 0.0))
        if strength == 0:
            continue
        shift = strength / (v - ensemble.ell[level] / obs.L)
        terms = 1.0 + shift
        scale = np.maximum(1.0, np.abs(shift))
        vanishing |= np.any(np.abs(terms) <= VANISHING_TOL * scale, axis=1)
        factors *= np.prod(terms, axis=1)
    return factors, vanishing


def deformed_expectation(
    spec: MeasureSpec,
    obs: ObservableSet,
    t: Mapping[PointKey, complex],
    observable: Union[Callable[[CornersPattern], complex], np.ndarray],
    refusal_threshold: float = REFUSAL_THRESHOLD,
) -> complex:
    """
    E_{t,v}[ξ] under the deformed measure.

    Args:
        t: deformation strength per (r, f); missing keys are zero

    Raises:
        CumulantError: if a deformation factor vanishes on the support
        DeformationRefused: if |Z(t, v)| is below ``refusal_threshold``·Σ|weights|
    """
    obs.validate(spec)
    ensemble = build_ensemble(spec)
    factors, vanishing = _factors_and_vanishing(ensemble, obs, t)
    support = ensemble.probs != 0
    if np.any(vanishing[support]):
        raise CumulantError("a deformation factor vanishes on the support; decrease |t|")
    weights = ensemble.probs * factors
    total = complex(np.sum(weights))
    magnitude = float(np.sum(np.abs(weights)))
    if abs(total) < refusal_threshold * magnitude:
        logger.warning(f"Refusing deformed measure: |Z| / Σ|w| = {abs(total) / magnitude:.3e}")
        raise DeformationRefused(f"|Z(t, v)| = {abs(total):.3e} is below {refusal_threshold:g}·Σ|weights|", abs(total))
    values = _observable_values(ensemble, observable)
    return complex(np.sum(weights * values) / total)


def deformation_derivative(
    spec: MeasureSpec,
    obs: ObservableSet,
    observable: Union[Callable[[CornersPattern], complex], np.ndarray],
    step: float = 1e-3,
) -> complex:
    """∂^m E_{t,v}[ξ] / Π ∂t^r_f at t = 0, over every point of ``obs``, by finite differences."""
    keys = [(level, index) for level, index, _ in obs.items()]
    ensemble = build_ensemble(spec)
    values = _observable_values(ensemble, observable)

    def evaluate(point: tuple) -> complex:
        return deformed_expectation(spec, obs, dict(zip(keys, point)), values)

    return mixed_partial(evaluate, [1] * len(keys), step=step)


def exact_cumulant(
    spec: MeasureSpec,
    obs: ObservableSet,
    observable: Union[Callable[[CornersPattern], complex], np.ndarray],
) -> complex:
    """M(ξ; G^r_L(v^r_f) for every point of ``obs``), the value the derivative converges to."""
    ensemble = build_ensemble(spec)
    variables = stieltjes_variables(ensemble, obs)
    return complex(cumulant_from_moments([_observable_values(ensemble, observable)] + list(variables.values()), ensemble))
