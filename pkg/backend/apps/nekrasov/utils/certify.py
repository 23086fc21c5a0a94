"""
Numerical certificates that R₁ and R₂ are entire in a neighbourhood of the
particle range.

Two independent tests are run on R normalized by its largest modulus on an
enclosing circle: a small circle around every candidate pole, and the
moments ∮ R(z)·((z−c)/ρ)ᵐ dz on the enclosing circle itself.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from apps.discrete.utils import MeasureSpec
from apps.numerics.utils import DEFAULT_ADAPTIVE_TOL, DEFAULT_MAX_NODES, ContourSpec, contour_integral

from .families import AnalyticFamily, boundary_points, geometric_setup
from .functions import diverging_constant, eval_R, resolve_branch

logger = logging.getLogger(__name__)

CLUSTER_DISTANCE = 1e-6
MAX_RADIUS = 0.1
SCALE_SAMPLES = 256
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class PoleCandidate:
    """The lattice point s = a − bθ."""
    a: int
    b: int
    location: float

    @classmethod
    def at(cls, a: int, b: int, theta: float) -> "PoleCandidate":
        return cls(a, b, a - b * theta)


@dataclass
class CandidateCluster:
    members: Tuple[PoleCandidate, ...]
    location: float
    boundary: bool


@dataclass
class CandidateResidue:
    location: float
    members: List[Tuple[int, int]]
    boundary: bool
    residue: complex
    nodes: int
    passed: bool


@dataclass
class AnalyticityReport:
    which: str
    branch: str
    tol: float
    scale: float
    radius: float
    residues: List[CandidateResidue] = field(default_factory=list)
    moments: List[float] = field(default_factory=list)
    residue_sum: complex = 0j

    @property
    def max_residue(self) -> float:
        return max((abs(r.residue) for r in self.residues), default=0.0)

    @property
    def max_raw_residue(self) -> float:
        """Largest residue before normalization."""
        return self.max_residue * self.scale

    @property
    def max_moment(self) -> float:
        return max(self.moments, default=0.0)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residues) and self.max_moment < self.tol

    def as_dict(self) -> dict:
        return {
            "which": self.which,
            "branch": self.branch,
            "tol": self.tol,
            "scale": self.scale,
            "radius": self.radius,
            "passed": self.passed,
            "max_residue": self.max_residue,
            "max_raw_residue": self.max_raw_residue,
            "max_moment": self.max_moment,
            "residue_sum": self.residue_sum,
            "candidates": [
                {
                    "location": r.location,
                    "members": [list(m) for m in r.members],
                    "boundary": r.boundary,
                    "residue": r.residue,
                    "modulus": abs(r.residue),
                    "nodes": r.nodes,
                    "passed": r.passed,
                }
                for r in self.residues
            ],
            "moments": list(self.moments),
        }


def candidate_poles(spec: MeasureSpec) -> List[PoleCandidate]:
    return [
        PoleCandidate.at(a, b, spec.theta)
        for a in range(spec.M + 2)
        for b in range(1, spec.N + 1)
    ]


def cluster_candidates(spec: MeasureSpec, distance: float = CLUSTER_DISTANCE) -> List[CandidateCluster]:
    """Merge candidates closer than ``distance``; each cluster is tested on one circle."""
    left, s_m = boundary_points(spec.theta, spec.N, spec.M)
    ordered = sorted(candidate_poles(spec), key=lambda c: c.location)
    groups: List[List[PoleCandidate]] = []
    for candidate in ordered:
        if groups and candidate.location - groups[-1][-1].location < distance:
            groups[-1].append(candidate)
        else:
            groups.append([candidate])
    clusters = []
    for group in groups:
        location = float(np.mean([c.location for c in group]))
        boundary = any(abs(location - edge) < distance for edge in (left, s_m))
        clusters.append(CandidateCluster(tuple(group), location, boundary))
    return clusters


def probe_radius(clusters: Sequence[CandidateCluster]) -> float:
    locations = [c.location for c in clusters]
    if len(locations) < 2:
        return MAX_RADIUS
    return min(MAX_RADIUS, 0.5 * float(np.min(np.diff(locations))))


def enclosing_contour(spec: MeasureSpec, nodes: int = 64) -> ContourSpec:
    """Circle around [−Nθ, s_M] with one unit of clearance."""
    left, s_m = boundary_points(spec.theta, spec.N, spec.M)
    return ContourSpec.circle(0.5 * (left + s_m), 0.5 * (s_m - left) + 1.0, nodes=nodes)


def certify_analyticity(
    spec: MeasureSpec,
    family: AnalyticFamily,
    which: str = "R1",
    tol: float = DEFAULT_TOL,
    theta_branch: Optional[str] = None,
    quadrature_tol: float = DEFAULT_ADAPTIVE_TOL,
    max_nodes: int = DEFAULT_MAX_NODES,
    threads: Optional[int] = None,
) -> AnalyticityReport:
    """
    Per-pole residues and enclosing-circle moments of R₁ or R₂.

    Raises:
        QuadratureNotConverged: propagated from any contour integral
    """
    branch = resolve_branch(spec.theta, theta_branch)
    clusters = cluster_candidates(spec)
    radius = probe_radius(clusters)
    outer = enclosing_contour(spec)

    scale = float(np.max(np.abs(eval_R(spec, family, outer.sample_points(SCALE_SAMPLES), which, branch))))
    if scale == 0.0 or not math.isfinite(scale):
        scale = 1.0
    normalized = lambda z: eval_R(spec, family, z, which, branch) / scale
    logger.info(
        f"Certifying {which} ({family.label}, θ={spec.theta}, branch={branch}): "
        f"{len(clusters)} candidate clusters, r={radius:.3g}, scale={scale:.3e}"
    )

    def residue_at(cluster: CandidateCluster) -> CandidateResidue:
        result = contour_integral(
            normalized,
            ContourSpec.circle(cluster.location, radius),
            adaptive_tol=quadrature_tol,
            max_nodes=max_nodes,
        )
        logger.debug(f"{which} residue at {cluster.location:.6f}: {abs(result.value):.3e}")
        return CandidateResidue(
            location=cluster.location,
            members=[(c.a, c.b) for c in cluster.members],
            boundary=cluster.boundary,
            residue=result.value,
            nodes=result.node_count_used,
            passed=abs(result.value) < tol,
        )

    with ThreadPoolExecutor(max_workers=threads) as pool:
        residues = list(pool.map(residue_at, clusters))

    center, rho = outer.center, outer.semi_axis_x
    moments = []
    for m in range(len(clusters) + 1):
        result = contour_integral(
            lambda z, m=m: normalized(z) * ((z - center) / rho) ** m,
            outer,
            adaptive_tol=quadrature_tol,
            max_nodes=max_nodes,
        )
        moments.append(abs(result.value))

    report = AnalyticityReport(
        which=which,
        branch=branch,
        tol=tol,
        scale=scale,
        radius=radius,
        residues=residues,
        moments=moments,
        residue_sum=complex(sum(r.residue for r in residues) * scale),
    )
    if report.passed:
        logger.info(f"{which} certified: max residue {report.max_residue:.3e}, max moment {report.max_moment:.3e}")
    else:
        logger.warning(f"{which} not analytic: max residue {report.max_residue:.3e}, max moment {report.max_moment:.3e}")
    return report


@dataclass
class ContinuityReport:
    which: str
    points: List[complex]
    limits: List[complex]
    at_one: List[complex]
    tol: float

    @property
    def max_error(self) -> float:
        return max((abs(a - b) for a, b in zip(self.limits, self.at_one)), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tol

    def as_dict(self) -> dict:
        return {
            "which": self.which,
            "points": self.points,
            "limits": self.limits,
            "at_one": self.at_one,
            "max_error": self.max_error,
            "passed": self.passed,
            "tol": self.tol,
        }


def theta_continuity(
    which: str,
    qs: Sequence[float],
    N: int,
    k: int,
    M: int,
    points: Sequence[complex] = (0.5 + 1.5j, 2.0 + 2.0j, -1.0 + 1.0j),
    steps: Tuple[float, float] = (1e-3, 1e-4),
    tol: float = 1e-6,
) -> ContinuityReport:
    """
    Compare lim_{θ→1} (R^θ − G^θ) with the θ = 1 form for the geometric family.

    A(h) = (D(1+h) + D(1−h))/2 removes the odd part of D = R^θ − G^θ and two
    steps h₁ > h₂ are combined as (h₁²·A(h₂) − h₂²·A(h₁))/(h₁² − h₂²).
    """
    z = np.asarray(points, dtype=complex)

    def difference(theta: float) -> np.ndarray:
        spec, family = geometric_setup(qs, theta, N, k, M)
        return eval_R(spec, family, z, which, "general") - diverging_constant(family, theta, z, which)

    averages = [0.5 * (difference(1.0 + h) + difference(1.0 - h)) for h in steps]
    big, small = steps
    limit = (big ** 2 * averages[1] - small ** 2 * averages[0]) / (big ** 2 - small ** 2)

    spec, family = geometric_setup(qs, 1.0, N, k, M)
    reference = eval_R(spec, family, z, which, "one")
    report = ContinuityReport(which, list(z), list(limit), list(reference), tol)
    logger.info(f"θ→1 continuity of {which}: max error {report.max_error:.3e}")
    return report
