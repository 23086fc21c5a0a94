"""
Dixon–Anderson integrals over an interlacing slice.

For x_1 < … < x_N,

    ∫ Π_{i<j} (y_j − y_i) Π_{i,j} |y_i − x_j|^{θ−1} dy = Γ(θ)ᴺ/Γ(Nθ) · Π_{i<j} (x_j − x_i)^{2θ−1}

with y_i ∈ (x_i, x_{i+1}). Each panel carries the two endpoint singularities
|y − x_i|^{θ−1}|y − x_{i+1}|^{θ−1}, which are absorbed into a Gauss–Jacobi
rule with α = β = θ − 1; what is left of the integrand is smooth on the panel.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, roots_jacobi

from apps.numerics.utils import make_generator

from .spec import ContinuousSpec, ContinuousSpecError, log_density, log_density_batch

logger = logging.getLogger(__name__)

START_NODES = 8
MAX_NODES = 128
RELATIVE_TOL = 1e-12


@dataclass
class DixonAndersonResult:
    theta: float
    nodes: List[float]
    integral: float
    closed_form: float
    quadrature_nodes: int

    @property
    def residual(self) -> float:
        return abs(self.integral - self.closed_form) / abs(self.closed_form)

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "x": list(self.nodes),
            "integral": self.integral,
            "closed_form": self.closed_form,
            "relative_residual": self.residual,
            "quadrature_nodes": self.quadrature_nodes,
        }


def jacobi_tensor_rule(x: np.ndarray, theta: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes (P, N−1) and weights (P,) for ∫ f(y) Π_i |y_i − x_i|^{θ−1}|y_i − x_{i+1}|^{θ−1} dy
    over the panels y_i ∈ (x_i, x_{i+1}), n nodes per panel.
    """
    roots, weights = roots_jacobi(n, theta - 1.0, theta - 1.0)
    panels = len(x) - 1
    halves = 0.5 * (x[1:] - x[:-1])
    points = [0.5 * (x[i] + x[i + 1]) + halves[i] * roots for i in range(panels)]
    y = np.stack([g.ravel() for g in np.meshgrid(*points, indexing="ij")], axis=-1)
    w = np.ones(y.shape[0])
    for grid_weights in np.meshgrid(*([weights] * panels), indexing="ij"):
        w = w * grid_weights.ravel()
    return y, w * float(np.prod(halves ** (2.0 * theta - 1.0)))


def _interlaced_integral(x: np.ndarray, theta: float, n: int) -> float:
    """Tensor Gauss–Jacobi estimate of the left-hand side with n nodes per panel."""
    y, w = jacobi_tensor_rule(x, theta, n)
    panels = len(x) - 1

    integrand = np.ones(y.shape[0])
    for a, b in itertools.combinations(range(panels), 2):
        integrand = integrand * (y[:, b] - y[:, a])
    for i in range(panels):
        for j in range(len(x)):
            if j in (i, i + 1):
                continue
            integrand = integrand * np.abs(y[:, i] - x[j]) ** (theta - 1.0)
    return float(np.sum(w * integrand))


def dixon_anderson_closed_form(x: Sequence[float], theta: float) -> float:
    x = np.asarray(x, dtype=float)
    log_value = len(x) * gammaln(theta) - gammaln(len(x) * theta)
    for a, b in itertools.combinations(range(len(x)), 2):
        log_value += (2.0 * theta - 1.0) * math.log(x[b] - x[a])
    return math.exp(log_value)


def verify_dixon_anderson(
    x: Sequence[float],
    theta: float,
    max_nodes: int = MAX_NODES,
) -> DixonAndersonResult:
    """
    Compare the interlacing integral with its closed form.

    Node counts per panel double from 8 until two estimates agree to 1e−12
    relative or ``max_nodes`` is reached.

    Raises:
        ContinuousSpecError: for fewer than two nodes, non-increasing x or θ ≤ 0
    """
    x = np.asarray(x, dtype=float)
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise ContinuousSpecError("x must hold at least two strictly increasing reals")
    if theta <= 0:
        raise ContinuousSpecError(f"theta must be positive, got {theta}")

    n = START_NODES
    estimate = _interlaced_integral(x, theta, n)
    while 2 * n <= max_nodes:
        refined = _interlaced_integral(x, theta, 2 * n)
        n *= 2
        converged = abs(refined - estimate) <= RELATIVE_TOL * abs(refined)
        estimate = refined
        if converged:
            break
    result = DixonAndersonResult(theta, list(x), estimate, dixon_anderson_closed_form(x, theta), n)
    logger.debug(f"Dixon–Anderson N={x.size}, θ={theta}: relative residual {result.residual:.3e} ({n} nodes)")
    return result


@dataclass
class ProjectionProbe:
    stack: List[List[float]]
    integrated: float
    projected: float

    @property
    def relative_gap(self) -> float:
        return abs(self.integrated - self.projected) / max(abs(self.projected), 1e-300)


def project_lower_level(spec: ContinuousSpec, upper_stack: Sequence[Sequence[float]], nodes: int = 64) -> ProjectionProbe:
    """
    Integrate level k out of the (N, k) density at fixed upper levels and
    compare with the (N, k+1) density there.

    Args:
        upper_stack: levels N..k+1, top first

    Raises:
        ContinuousSpecError: if k = N or the stack does not fit
    """
    if spec.k == spec.N:
        raise ContinuousSpecError("there is no lower level to integrate out when k = N")
    upper = [np.asarray(level, dtype=float) for level in upper_stack]
    projected = math.exp(log_density(coarser_spec(spec), upper))

    x = upper[-1]
    lower, weights = jacobi_tensor_rule(x, spec.theta, nodes)
    # the rule already carries the two endpoint factors of every panel
    endpoint = np.ones(lower.shape[0])
    for i in range(len(x) - 1):
        endpoint = endpoint * (np.abs(lower[:, i] - x[i]) * np.abs(lower[:, i] - x[i + 1])) ** (spec.theta - 1.0)
    head = np.broadcast_to(np.concatenate(upper), (lower.shape[0], sum(len(level) for level in upper)))
    values = np.exp(log_density_batch(spec, np.concatenate([head, lower], axis=1))) / endpoint
    return ProjectionProbe([list(level) for level in upper], float(np.sum(weights * values)), projected)


def coarser_spec(spec: ContinuousSpec) -> ContinuousSpec:
    """The same density with level k integrated out."""
    return ContinuousSpec(spec.theta, spec.N, spec.k + 1, spec.a_minus, spec.a_plus, spec.potential)


def projection_consistency(
    spec: ContinuousSpec,
    probes: int = 10,
    seed: Optional[int] = None,
    nodes: int = 64,
) -> List[ProjectionProbe]:
    """Random interlacing upper stacks, each checked with ``project_lower_level``."""
    rng = make_generator(seed)
    width = spec.a_plus - spec.a_minus
    results = []
    while len(results) < probes:
        levels = [np.sort(rng.uniform(spec.a_minus, spec.a_plus, spec.N))]
        for _ in range(spec.N - spec.k - 1):
            above = levels[-1]
            levels.append(rng.uniform(above[:-1], above[1:]))
        if np.min(np.diff(levels[-1])) < 1e-3 * width:
            continue
        results.append(project_lower_level(spec, levels, nodes))
    logger.info(f"Projection check: max relative gap {max(p.relative_gap for p in results):.3e} over {probes} probes")
    return results
