"""
Statistical check of the continuous multi-level loop equations.

With 𝒢ʲ(z) = Σ_i 1/(z − Yʲ_i), ∂𝒢ʲ(z) = −Σ_i 1/(z − Yʲ_i)² and

    𝔖(z) = −2NθV'(z)𝒢ᴺ + θ∂𝒢ᴺ + θ(𝒢ᴺ)² + (θ−2)∂𝒢ᵏ + θ(𝒢ᵏ)²
           + Σ_{j=k+1}^N [−(θ+1)∂𝒢ʲ + (1−θ)(𝒢ʲ − 𝒢ʲ⁻¹)² + (1−θ)∂𝒢ʲ⁻¹],

the contour integral

    (1/2πi)∮ (z−a−)(z−a+)/(z−v) · [κ(𝔖(z); 𝔐)/2 + Σ_{(r,f)∈𝔐} κ(𝒢ʳ(z); 𝔐∖{(r,f)})/(z−vʳ_f)²] dz

vanishes for a contour around [a−, a+] that leaves v and every vʳ_f outside.
Cumulants are estimated from a sample batch, so the integral is only zero up
to Monte Carlo error; the error bar comes from redoing the integral on each
batch-means block.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from apps.cumulants.utils import CumulantError, ObservableSet, cumulant_from_moments
from apps.numerics.utils import ContourSpec

from .sampler import SampleBatch
from .spec import ContinuousSpec, ContinuousSpecError
from .statistics import DEFAULT_BATCHES, batch_spread

logger = logging.getLogger(__name__)

MAX_OBSERVATIONS = 2
DEFAULT_SIGMAS = 4.0
CONTOUR_NODES = 128
CHUNK_ELEMENTS = 2 ** 21
ABSOLUTE_FLOOR = 1e-12


@dataclass
class ContinuousLoopReport:
    spec: dict
    points: dict
    v: complex
    contour: dict
    samples: int
    value: complex
    stderr: float
    sigmas: float = DEFAULT_SIGMAS

    @property
    def residual(self) -> float:
        return abs(self.value)

    @property
    def passed(self) -> bool:
        return self.residual <= max(self.sigmas * self.stderr, ABSOLUTE_FLOOR)

    def as_dict(self) -> dict:
        return {
            "spec": self.spec,
            "points": self.points,
            "v": self.v,
            "contour": self.contour,
            "samples": self.samples,
            "value": self.value,
            "residual": self.residual,
            "stderr": self.stderr,
            "sigmas": self.sigmas,
            "passed": self.passed,
        }


def default_contour(spec: ContinuousSpec, nodes: int = CONTOUR_NODES) -> ContourSpec:
    """Ellipse around [a−, a+] with margin 0.5 and semi-minor axis 1."""
    return ContourSpec.around_segment(spec.a_minus, spec.a_plus, margin=0.5, semi_minor=1.0, nodes=nodes)


def default_points(
    spec: ContinuousSpec, counts: Mapping[int, int], contour: Optional[ContourSpec] = None
) -> Tuple[ObservableSet, complex]:
    """Real points vʳ_f right of the contour, spaced 0.75 apart, and v to its left."""
    contour = contour or default_contour(spec)
    left, right = contour.real_extent
    points, offset = {}, 0
    for level in sorted(counts):
        points[level] = tuple(right + 1.0 + 0.75 * (offset + n) for n in range(counts[level]))
        offset += counts[level]
    return ObservableSet.from_mapping(1.0, points), complex(left - 1.0)


def _check_setup(spec: ContinuousSpec, obs: ObservableSet, v: complex, contour: ContourSpec):
    if obs.total > MAX_OBSERVATIONS:
        raise CumulantError(f"at most {MAX_OBSERVATIONS} observation points, got {obs.total}")
    for level, _ in obs.points:
        if not spec.k <= level <= spec.N:
            raise CumulantError(f"observation level {level} outside [{spec.k}, {spec.N}]")
    for end in (spec.a_minus, spec.a_plus):
        if not contour.contains(complex(end)):
            raise CumulantError(f"contour does not enclose the endpoint {end:.6g}")
    for label, point in [("v", v)] + [(f"v^{r}_{f}", p) for r, f, p in obs.items()]:
        point = complex(point)
        if contour.contains(point):
            raise CumulantError(f"{label} = {point:.6g} lies inside the contour")
        if point.imag == 0 and spec.a_minus <= point.real <= spec.a_plus:
            raise CumulantError(f"{label} = {point:.6g} lies on [a−, a+]")


def stieltjes_transforms(batch: SampleBatch, z: np.ndarray) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]]:
    """𝒢ʲ and ∂𝒢ʲ at every node for every sample, each of shape (nodes, S)."""
    G, dG = {}, {}
    for j in batch.spec.levels:
        inverse = 1.0 / (z[:, None, None] - batch.level(j)[None, :, :])
        G[j] = inverse.sum(axis=-1)
        dG[j] = -(inverse * inverse).sum(axis=-1)
    return G, dG


def s_functional(spec: ContinuousSpec, z: np.ndarray, G: Mapping[int, np.ndarray], dG: Mapping[int, np.ndarray]):
    """𝔖(z) as a random variable, shape (nodes, S)."""
    theta, N, k = spec.theta, spec.N, spec.k
    dV = spec.dV(z)[:, None]
    total = -2.0 * N * theta * dV * G[N] + theta * dG[N] + theta * G[N] ** 2
    total = total + (theta - 2.0) * dG[k] + theta * G[k] ** 2
    for j in range(k + 1, N + 1):
        total = total - (theta + 1.0) * dG[j] + (1.0 - theta) * (dG[j - 1] + (G[j] - G[j - 1]) ** 2)
    return total


def _bracket(obs, z, S, G, fixed: Dict[Tuple[int, int], np.ndarray], block: slice) -> np.ndarray:
    """κ(𝔖; 𝔐)/2 + Σ κ(𝒢ʳ; 𝔐∖{(r,f)})/(z − vʳ_f)² on the samples of ``block``."""
    size = block.stop - block.start
    uniform = np.full(size, 1.0 / size)
    keys = list(fixed)
    others = [fixed[key][block] for key in keys]
    bracket = 0.5 * cumulant_from_moments([S[:, block]] + others, uniform)
    for n, (level, index) in enumerate(keys):
        rest = others[:n] + others[n + 1:]
        point = obs.point(level, index)
        bracket = bracket + cumulant_from_moments([G[level][:, block]] + rest, uniform) / (z - point) ** 2
    return bracket


def verify_continuous_loop_equation(
    batch: SampleBatch,
    obs: Optional[ObservableSet] = None,
    v: Optional[complex] = None,
    contour: Optional[ContourSpec] = None,
    batches: int = DEFAULT_BATCHES,
    sigmas: float = DEFAULT_SIGMAS,
) -> ContinuousLoopReport:
    """
    Estimate the loop-equation integral and its standard error from a batch.

    The integral uses the fixed-node trapezoid rule on ``contour``; the
    integrand is entire in z away from the samples, v and the vʳ_f, so the
    quadrature error is far below the statistical one.

    Raises:
        CumulantError: more than two points, or v, vʳ_f inside the contour
    """
    spec = batch.spec
    contour = contour or default_contour(spec)
    if obs is None or v is None:
        default_obs, default_v = default_points(spec, {}, contour)
        obs = default_obs if obs is None else obs
        v = default_v if v is None else v
    _check_setup(spec, obs, v, contour)

    fixed = {}
    for level, index, point in obs.items():
        fixed[(level, index)] = np.sum(1.0 / (point - batch.level(level)), axis=-1)

    n = contour.nodes
    t = 2.0 * math.pi * np.arange(n) / n
    z_all, dz_all = contour.parametrize(t)
    weights_all = (z_all - spec.a_minus) * (z_all - spec.a_plus) / (z_all - v) * dz_all / (1j * n)

    blocks = batch.batch_slices(batches)
    whole = slice(0, len(batch))
    chunk = max(1, CHUNK_ELEMENTS // (len(batch) * spec.N))
    value = 0j
    per_batch = np.zeros(len(blocks), dtype=complex)
    for start in range(0, n, chunk):
        z = z_all[start:start + chunk]
        weights = weights_all[start:start + chunk]
        G, dG = stieltjes_transforms(batch, z)
        S = s_functional(spec, z, G, dG)
        value += complex(np.sum(weights * _bracket(obs, z, S, G, fixed, whole)))
        for b, block in enumerate(blocks):
            per_batch[b] += np.sum(weights * _bracket(obs, z, S, G, fixed, block))

    report = ContinuousLoopReport(
        spec=spec.describe(),
        points=obs.describe(),
        v=complex(v),
        contour={"center": contour.center, "semi_axes": [contour.semi_axis_x, contour.semi_axis_y], "nodes": n},
        samples=len(batch),
        value=value,
        stderr=float(batch_spread(per_batch)),
        sigmas=sigmas,
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(
        level,
        f"Continuous loop equation, {obs.total} points, {len(batch)} samples: "
        f"|∮| = {report.residual:.3e}, stderr {report.stderr:.3e}",
    )
    return report


def doubling_check(small: ContinuousLoopReport, large: ContinuousLoopReport) -> bool:
    """
    A structural failure shows as a residual that does not shrink with more
    samples: the larger run must not exceed the smaller one's residual beyond
    its own error bar.
    """
    if large.samples < small.samples:
        raise ContinuousSpecError("the second report must come from the larger batch")
    return large.residual <= max(small.residual, large.sigmas * large.stderr)


def residual_sequence(reports: List[ContinuousLoopReport]) -> List[dict]:
    return [{"samples": r.samples, "residual": r.residual, "stderr": r.stderr} for r in reports]
