"""
Trapezoid quadrature of (1/2πi)∮ f(z) dz over circles and ellipses.

The periodic trapezoid rule is spectrally accurate for integrands analytic in
an annulus around the contour. Nodes are doubled (reusing previous
evaluations) until two successive estimates agree.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .special import NumericsContractError

logger = logging.getLogger(__name__)

DEFAULT_ADAPTIVE_TOL = 1e-10
DEFAULT_MAX_NODES = 2 ** 16


class QuadratureNotConverged(Exception):
    """Raised when the node cap is reached before the estimate settles."""

    def __init__(self, message: str, result: "QuadratureResult"):
        super().__init__(message)
        self.result = result


class IntegrandEvaluationError(Exception):
    """Raised when the integrand returns a non-finite value on the contour."""
    pass


@dataclass(frozen=True)
class ContourSpec:
    """
    Closed contour z(t) = center + a·cos t + i·b·sin t, t in [0, 2π).

    orientation is +1 for counter-clockwise traversal and -1 for clockwise.
    """
    center: complex = 0j
    semi_axis_x: float = 1.0
    semi_axis_y: float = 1.0
    nodes: int = 64
    orientation: int = 1

    def __post_init__(self):
        if self.semi_axis_x <= 0 or self.semi_axis_y <= 0:
            raise NumericsContractError("contour semi-axes must be positive")
        if self.nodes < 8 or self.nodes % 2:
            raise NumericsContractError(f"contour needs an even node count >= 8, got {self.nodes}")
        if self.orientation not in (1, -1):
            raise NumericsContractError("orientation must be +1 or -1")

    @classmethod
    def circle(cls, center: complex, radius: float, nodes: int = 64) -> "ContourSpec":
        return cls(center=complex(center), semi_axis_x=radius, semi_axis_y=radius, nodes=nodes)

    @classmethod
    def around_segment(
        cls,
        left: float,
        right: float,
        margin: float = 0.25,
        semi_minor: float = 0.5,
        nodes: int = 64,
    ) -> "ContourSpec":
        """Ellipse enclosing [left, right] with a horizontal margin on both ends."""
        return cls(
            center=complex(0.5 * (left + right)),
            semi_axis_x=0.5 * (right - left) + margin,
            semi_axis_y=semi_minor,
            nodes=nodes,
        )

    @property
    def real_extent(self) -> tuple:
        return (self.center.real - self.semi_axis_x, self.center.real + self.semi_axis_x)

    def reversed(self) -> "ContourSpec":
        return replace(self, orientation=-self.orientation)

    def contains(self, z: complex) -> bool:
        dx = (z.real - self.center.real) / self.semi_axis_x
        dy = (z.imag - self.center.imag) / self.semi_axis_y
        return dx * dx + dy * dy < 1.0

    def parametrize(self, t: np.ndarray):
        """Return (z(t), z'(t)) with the orientation folded into z'."""
        cos_t, sin_t = np.cos(t), np.sin(t)
        z = self.center + self.semi_axis_x * cos_t + 1j * self.semi_axis_y * sin_t
        dz = -self.semi_axis_x * sin_t + 1j * self.semi_axis_y * cos_t
        return z, self.orientation * dz

    def sample_points(self, count: int = 256) -> np.ndarray:
        z, _ = self.parametrize(2.0 * math.pi * np.arange(count) / count)
        return z


@dataclass
class QuadratureResult:
    value: complex
    node_count_used: int
    last_refinement_delta: float

    @property
    def converged(self) -> bool:
        return math.isfinite(self.last_refinement_delta)


def _weighted_values(f: Callable, contour: ContourSpec, t: np.ndarray) -> np.ndarray:
    z, dz = contour.parametrize(t)
    values = np.broadcast_to(np.asarray(f(z), dtype=complex), z.shape)
    if not np.all(np.isfinite(values)):
        bad = z[~np.isfinite(values)][0]
        logger.error(f"Integrand is not finite at z={bad:.6g}")
        raise IntegrandEvaluationError(f"integrand is not finite at z={bad:.6g}")
    return values * dz


def trapezoid_estimate(f: Callable[[np.ndarray], np.ndarray], contour: ContourSpec) -> complex:
    """Fixed-node trapezoid value using exactly contour.nodes points."""
    n = contour.nodes
    return complex(np.sum(_weighted_values(f, contour, 2.0 * math.pi * np.arange(n) / n)) / (1j * n))


def contour_integral(
    f: Callable[[np.ndarray], np.ndarray],
    contour: ContourSpec,
    adaptive_tol: float = DEFAULT_ADAPTIVE_TOL,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> QuadratureResult:
    """
    Compute (1/2πi)∮ f(z) dz along ``contour``.

    Args:
        f: vectorized integrand, called with a complex ndarray of nodes
        contour: the closed contour
        adaptive_tol: stop when two successive estimates differ by less than this
        max_nodes: node cap

    Returns:
        QuadratureResult with the final estimate

    Raises:
        QuadratureNotConverged: if the cap is hit first; the exception carries
            the last estimate and delta
    """
    n = contour.nodes
    running = np.sum(_weighted_values(f, contour, 2.0 * math.pi * np.arange(n) / n))
    estimate = running / (1j * n)
    delta = math.inf

    while True:
        if 2 * n > max_nodes:
            result = QuadratureResult(complex(estimate), n, delta)
            logger.warning(f"Quadrature stopped at {n} nodes with delta {delta:.3e}")
            raise QuadratureNotConverged(
                f"no convergence within {max_nodes} nodes (last delta {delta:.3e})", result
            )
        offsets = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        running += np.sum(_weighted_values(f, contour, offsets))
        n *= 2
        refined = running / (1j * n)
        delta = abs(refined - estimate)
        estimate = refined
        if delta < adaptive_tol:
            return QuadratureResult(complex(estimate), n, float(delta))
