"""
Exact expectations over the enumerated state space.

A PatternEnsemble materializes the integer λ's of every pattern level by
level, normalizes the weights once (max log-modulus subtracted before
exponentiation) and then answers expectations as dot products.
"""

import logging
from functools import lru_cache
from typing import Callable, Dict, Iterator, Optional, Union

import numpy as np

from apps.state_space.utils import CornersPattern, PatternKey, enumerate_pattern_keys

from .measure import MeasureSpec, log_weights_batch

logger = logging.getLogger(__name__)

REFUSAL_THRESHOLD = 1e-8
Z_CHUNK = 256


class MeasureRefused(Exception):
    """Raised when |Z| is too small relative to Σ|weights| to trust the measure."""

    def __init__(self, message: str, modulus: float = 0.0, condition: float = float("inf")):
        super().__init__(message)
        self.modulus = modulus
        self.condition = condition


class PatternEnsemble:
    """
    Normalized measure on the full state space.

    Attributes:
        keys: pattern keys in enumeration order
        lam: level j -> int array (P, j)
        ell: level j -> float array (P, j)
        probs: normalized weights, real when the measure is real
        log_shift: the max log-modulus removed before exponentiation
        condition: Σ|w| / |Z|
    """

    def __init__(self, spec: MeasureSpec, refusal_threshold: float = REFUSAL_THRESHOLD):
        self.spec = spec
        self.keys = list(enumerate_pattern_keys(spec.N, spec.k, spec.M))
        size = len(self.keys)
        self.lam = {}
        self.ell = {}
        for j in range(spec.k, spec.N + 1):
            parts = np.array([key[spec.N - j] for key in self.keys], dtype=int).reshape(size, j)
            self.lam[j] = parts
            self.ell[j] = parts - spec.theta * np.arange(1, j + 1)

        log_weights = log_weights_batch(spec, self.ell)
        self.log_shift = float(np.max(log_weights.real))
        scaled = np.exp(log_weights - self.log_shift)
        total = complex(np.sum(scaled))
        magnitude = float(np.sum(np.abs(scaled)))
        self.condition = magnitude / abs(total) if total != 0 else float("inf")
        if abs(total) < refusal_threshold * magnitude:
            logger.warning(f"Refusing measure: |Z| / Σ|w| = {abs(total) / magnitude:.3e}")
            raise MeasureRefused(
                f"|Z| = {abs(total) * np.exp(self.log_shift):.3e} is below "
                f"{refusal_threshold:g}·Σ|weights|",
                modulus=abs(total) * float(np.exp(self.log_shift)),
                condition=self.condition,
            )

        self.is_real = bool(np.all(np.imag(scaled) == 0))
        probs = scaled / total
        self.probs = probs.real if self.is_real else probs
        self.partition_scaled = total
        self._index: Optional[Dict[PatternKey, int]] = None
        logger.debug(f"Built ensemble of {size} patterns (N={spec.N}, k={spec.k}, M={spec.M})")

    def __len__(self):
        return len(self.keys)

    @property
    def partition_function(self) -> Union[float, complex]:
        value = self.partition_scaled * np.exp(self.log_shift)
        return float(value.real) if self.is_real else complex(value)

    def index(self, key: PatternKey) -> int:
        if self._index is None:
            self._index = {key: n for n, key in enumerate(self.keys)}
        return self._index[tuple(tuple(level) for level in key)]

    def probability(self, key: PatternKey):
        try:
            return self.probs[self.index(key)]
        except KeyError:
            return 0.0

    def patterns(self) -> Iterator[CornersPattern]:
        spec = self.spec
        for key in self.keys:
            yield CornersPattern(spec.theta, spec.N, spec.k, spec.M, key)

    def expect(self, values: np.ndarray):
        """Σ_p P(p)·values[..., p] along the last axis."""
        return np.asarray(values) @ self.probs

    def expectation(self, observable: Union[Callable[[CornersPattern], complex], np.ndarray]):
        if callable(observable):
            values = np.fromiter((observable(p) for p in self.patterns()), dtype=complex, count=len(self))
        else:
            values = np.asarray(observable)
        result = complex(self.expect(values))
        return result.real if self.is_real and result.imag == 0 else result

    def particle_product(self, z: np.ndarray, level: int, num_shift: Optional[float], den_shift: Optional[float]):
        """
        Π_p (z − ℓʲ_p + num_shift)/(z − ℓʲ_p + den_shift) as an array of shape (len(z), P).

        A shift of None drops that side of the fraction.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))[:, None]
        result = np.ones((z.shape[0], len(self)), dtype=complex)
        for p in range(level):
            diff = z - self.ell[level][None, :, p]
            if num_shift is not None:
                result *= diff + num_shift
            if den_shift is not None:
                result /= diff + den_shift
        return result

    def expect_product(self, z, factors, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """
        E[values · Π over ``factors`` of particle_product(z, level, a, b)], chunked over z.

        Args:
            z: evaluation points
            factors: iterable of (level, num_shift, den_shift)
            weights: optional per-pattern array multiplying the product
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape, dtype=complex)
        for start in range(0, z.size, Z_CHUNK):
            chunk = z[start:start + Z_CHUNK]
            values = np.ones((chunk.size, len(self)), dtype=complex)
            for level, num_shift, den_shift in factors:
                values *= self.particle_product(chunk, level, num_shift, den_shift)
            if weights is not None:
                values *= weights[None, :]
            out[start:start + Z_CHUNK] = self.expect(values)
        return out

    def resolvent(self, z, level: int, shift: float) -> np.ndarray:
        """Σ_p 1/(z − ℓʲ_p + shift) per pattern, shape (len(z), P)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))[:, None, None]
        return np.sum(1.0 / (z - self.ell[level][None, :, :] + shift), axis=-1)

    def expect_resolvent(self, z, level: int, shift: float) -> np.ndarray:
        """E[Σ_p 1/(z − ℓʲ_p + shift)] for j = ``level``, chunked over z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape, dtype=complex)
        for start in range(0, z.size, Z_CHUNK):
            out[start:start + Z_CHUNK] = self.expect(self.resolvent(z[start:start + Z_CHUNK], level, shift))
        return out


@lru_cache(maxsize=8)
def build_ensemble(spec: MeasureSpec) -> PatternEnsemble:
    return PatternEnsemble(spec)


def partition_function(spec: MeasureSpec):
    """Z by exact summation over the state space."""
    return build_ensemble(spec).partition_function


def expectation(spec: MeasureSpec, observable):
    return build_ensemble(spec).expectation(observable)
