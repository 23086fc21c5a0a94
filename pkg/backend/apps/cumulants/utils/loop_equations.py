"""
Exact check of the discrete multi-level loop equations.

For a measure whose only nontrivial weight sits on the top level, with

    w_N(x) / w_N(x−1) = Φ₊(x) / Φ₋(x),

and S_v(Lz) = L(z−v) / ((Lz+Nθ)(Lz−M−1+θ)), the sum over subset tuples
(F_k, …, F_N) of three groups of contour integrals vanishes:

    top     [every F_i full] ∮ Φ₋(Lz)/S_v · M(Π_{p≤N} (Lz−ℓᴺ_p−θ)/(Lz−ℓᴺ_p); F)
    bottom  ∮ Φ₊(Lz)/S_v · C_k(z) · M(Π_{p≤k} (Lz−ℓᵏ_p+θ−1)/(Lz−ℓᵏ_p−1); F)
    middle  θ/(1−θ) Σ_{j>k} [F_i full for i<j] ∮ Φ₊(Lz)/S_v · C_j(z) ·
            M(Π_{p≤j} (Lz−ℓʲ_p−θ)/(Lz−ℓʲ_p−1) · Π_{p<j} (Lz−ℓʲ⁻¹_p+θ−1)/(Lz−ℓʲ⁻¹_p); F)

with C_j(z) = Π_{i≥j} Π_{f∉F_i} 1/(L(vⁱ_f−z)(vⁱ_f−z+1/L)). At θ = 1 the
middle cumulant is taken of Σ_p 1/(Lz−ℓʲ_p−1) − Σ_p 1/(Lz−ℓʲ⁻¹_p) and the
θ/(1−θ) factor is dropped.

Every cumulant is exact (partition sum over enumerated moments); only the
contour integrals are numerical.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from apps.discrete.utils import GeometricWeight, MeasureSpec, PatternEnsemble, build_ensemble
from apps.nekrasov.utils import PhiFunction, krawtchouk_family, lattice_ratio, resolve_branch
from apps.numerics.utils import (
    DEFAULT_ADAPTIVE_TOL,
    DEFAULT_MAX_NODES,
    ContourSpec,
    contour_integral,
    trapezoid_estimate,
)

from .algebra import CumulantError, cumulant_from_moments
from .observables import CumulantKey, ObservableSet, stieltjes_variables

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_OBSERVATIONS = 3
PHI_TOL = 1e-10
NODE_CHUNK = 256
POINT_CLEARANCE = 1.0
POINT_SPACING = 0.75


@dataclass
class LoopTerm:
    group: str
    level: Optional[int]
    key: CumulantKey
    value: complex
    nodes: int

    @property
    def label(self) -> str:
        where = f"j={self.level}" if self.level is not None else self.group
        return f"{self.group}[{where}] F=({self.key.label})"


@dataclass
class LoopEquationReport:
    branch: str
    L: float
    v: complex
    tol: float
    quadrature_tol: float
    terms: List[LoopTerm] = field(default_factory=list)

    @property
    def total(self) -> complex:
        return complex(sum(term.value for term in self.terms))

    @property
    def residual(self) -> float:
        return abs(self.total)

    @property
    def max_term(self) -> float:
        return max((abs(term.value) for term in self.terms), default=0.0)

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol * max(1.0, self.max_term)

    def as_dict(self) -> dict:
        return {
            "branch": self.branch,
            "L": self.L,
            "v": self.v,
            "tol": self.tol,
            "quadrature_tol": self.quadrature_tol,
            "total": self.total,
            "residual": self.residual,
            "max_term": self.max_term,
            "passed": self.passed,
            "terms": [
                {
                    "label": term.label,
                    "group": term.group,
                    "level": term.level,
                    "value": term.value,
                    "modulus": abs(term.value),
                    "nodes": term.nodes,
                }
                for term in self.terms
            ],
        }


def krawtchouk_loop_setup(q: float, theta: float, N: int, k: int, M: int) -> Tuple[MeasureSpec, PhiFunction, PhiFunction]:
    """The Krawtchouk-type top weight with Φ₊(x) = q(M+1−θ−x) and Φ₋(x) = x + Nθ."""
    spec, family = krawtchouk_family(q, theta, N, k, M)
    return spec, family.phi1[0], family.phi1[-1]


def default_contour(spec: MeasureSpec, L: float, nodes: int = 64) -> ContourSpec:
    """
    Ellipse around [−Nθ/L, (M+1−θ)/L] with margin 0.25 and semi-minor axis 0.5.

    The segment runs to s_M/L rather than (M−θ)/L: for θ < 1 the bottom and
    middle products have poles up to (M+1−2θ)/L.
    """
    return ContourSpec.around_segment(
        -spec.N * spec.theta / L,
        (spec.M + 1.0 - spec.theta) / L,
        margin=0.25,
        semi_minor=0.5,
        nodes=nodes,
    )


def default_observations(
    spec: MeasureSpec, L: float, counts: Dict[int, int], contour: Optional[ContourSpec] = None
) -> Tuple[ObservableSet, complex]:
    """
    Real observation points to the right of the contour and v to its left,
    each at least one unit outside.

    Args:
        counts: {level: m_r}
    """
    contour = contour or default_contour(spec, L)
    left, right = contour.real_extent
    points = {}
    offset = 0
    for level in sorted(counts):
        values = []
        for _ in range(counts[level]):
            values.append(right + POINT_CLEARANCE + POINT_SPACING * offset)
            offset += 1
        points[level] = tuple(values)
    return ObservableSet.from_mapping(L, points), complex(left - POINT_CLEARANCE - 0.5)


def _check_measure(spec: MeasureSpec, phi_plus: PhiFunction, phi_minus: PhiFunction):
    for j in range(spec.k, spec.N):
        weight = spec.weight(j)
        if not (isinstance(weight, GeometricWeight) and complex(weight.q) == 1):
            raise CumulantError(f"loop equations need w_{j} ≡ 1 below the top level")
    top = spec.weight(spec.N)
    for b in range(1, spec.N + 1):
        for a in range(1, spec.M + 1):
            x = a - b * spec.theta
            lhs = complex(phi_minus(x))
            rhs = complex(phi_plus(x)) * lattice_ratio(top, x)
            if abs(lhs - rhs) > PHI_TOL * max(1.0, abs(lhs), abs(rhs)):
                raise CumulantError(
                    f"w_N(x)/w_N(x−1) ≠ Φ₊(x)/Φ₋(x) at x={x:.6g}: Φ₋={lhs:.6g}, Φ₊·w(x−1)/w(x)={rhs:.6g}"
                )


def _check_contour(spec: MeasureSpec, obs: ObservableSet, v: complex, contour: ContourSpec):
    L = obs.L
    for end in (-spec.N * spec.theta / L, (spec.M - spec.theta) / L):
        if not contour.contains(complex(end)):
            raise CumulantError(f"contour does not enclose the particle range endpoint {end:.6g}")
    if contour.contains(complex(v)):
        raise CumulantError(f"v = {v:.6g} lies inside the contour")
    for level, index, point in obs.items():
        for z in (point, point + 1.0 / L):
            if contour.contains(complex(z)):
                raise CumulantError(f"v^{level}_{index} or its 1/L shift lies inside the contour")


def _power_set(m: int) -> List[Tuple[int, ...]]:
    members = range(1, m + 1)
    return [chosen for size in range(m + 1) for chosen in itertools.combinations(members, size)]


def _subset_tuples(spec: MeasureSpec, obs: ObservableSet) -> List[CumulantKey]:
    levels = [_power_set(obs.count(r)) for r in range(spec.k, spec.N + 1)]
    return [CumulantKey(spec.k, tuple(choice)) for choice in itertools.product(*levels)]


class _LoopIntegrands:
    """Builds the vectorized integrand of every term for one measure and observation set."""

    def __init__(self, spec: MeasureSpec, ensemble: PatternEnsemble, obs: ObservableSet, v: complex, phi_plus, phi_minus, branch: str):
        self.spec = spec
        self.ensemble = ensemble
        self.obs = obs
        self.v = complex(v)
        self.phi_plus = phi_plus
        self.phi_minus = phi_minus
        self.branch = branch
        self.stieltjes = stieltjes_variables(ensemble, obs)

    def inverse_s(self, z: np.ndarray) -> np.ndarray:
        spec, L = self.spec, self.obs.L
        w = L * z
        return (w + spec.N * spec.theta) * (w - spec.M - 1.0 + spec.theta) / (L * (z - self.v))

    def complement_factor(self, key: CumulantKey, lowest: int, z: np.ndarray) -> np.ndarray:
        L = self.obs.L
        factor = np.ones(z.shape, dtype=complex)
        for level in range(lowest, self.spec.N + 1):
            for index in key.complement(level, self.obs):
                point = self.obs.point(level, index)
                factor /= L * (point - z) * (point - z + 1.0 / L)
        return factor

    def top_variable(self, w: np.ndarray) -> np.ndarray:
        return self.ensemble.particle_product(w, self.spec.N, -self.spec.theta, 0.0)

    def bottom_variable(self, w: np.ndarray) -> np.ndarray:
        return self.ensemble.particle_product(w, self.spec.k, self.spec.theta - 1.0, -1.0)

    def middle_variable(self, w: np.ndarray, level: int) -> np.ndarray:
        theta = self.spec.theta
        if self.branch == "one":
            return self.ensemble.resolvent(w, level, -1.0) - self.ensemble.resolvent(w, level - 1, 0.0)
        upper = self.ensemble.particle_product(w, level, -theta, -1.0)
        lower = self.ensemble.particle_product(w, level - 1, theta - 1.0, 0.0)
        return theta / (1.0 - theta) * upper * lower

    def integrand(self, group: str, level: Optional[int], key: CumulantKey) -> Callable[[np.ndarray], np.ndarray]:
        chosen = [self.stieltjes[point] for point in key.chosen()]
        L = self.obs.L
        if group == "top":
            phi, variable, lowest = self.phi_minus, self.top_variable, None
        elif group == "bottom":
            phi, variable, lowest = self.phi_plus, self.bottom_variable, self.spec.k
        else:
            phi, variable, lowest = self.phi_plus, (lambda w: self.middle_variable(w, level)), level

        def evaluate(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=complex)
            out = np.empty(z.shape, dtype=complex)
            flat = z.ravel()
            values = out.reshape(-1)
            for start in range(0, flat.size, NODE_CHUNK):
                chunk = flat[start:start + NODE_CHUNK]
                w = L * chunk
                prefactor = phi(w) * self.inverse_s(chunk)
                if lowest is not None:
                    prefactor = prefactor * self.complement_factor(key, lowest, chunk)
                cumulant = cumulant_from_moments([variable(w)] + chosen, self.ensemble)
                values[start:start + NODE_CHUNK] = prefactor * cumulant
            return out

        return evaluate


def _terms(spec: MeasureSpec, obs: ObservableSet) -> List[Tuple[str, Optional[int], CumulantKey]]:
    tasks = []
    for key in _subset_tuples(spec, obs):
        if all(key.is_full(r, obs) for r in range(spec.k, spec.N + 1)):
            tasks.append(("top", None, key))
        tasks.append(("bottom", None, key))
        for j in range(spec.k + 1, spec.N + 1):
            if all(key.is_full(i, obs) for i in range(spec.k, j)):
                tasks.append(("middle", j, key))
    return tasks


def verify_discrete_loop_equation(
    spec: MeasureSpec,
    phi_plus: PhiFunction,
    phi_minus: PhiFunction,
    obs: ObservableSet,
    v: complex,
    contour: Optional[ContourSpec] = None,
    theta_branch: Optional[str] = None,
    tol: float = DEFAULT_TOL,
    quadrature_tol: float = DEFAULT_ADAPTIVE_TOL,
    max_nodes: int = DEFAULT_MAX_NODES,
    fixed_nodes: Optional[int] = None,
    threads: Optional[int] = None,
) -> LoopEquationReport:
    """
    Assemble every term of the loop equation and report their sum.

    Args:
        fixed_nodes: use a plain trapezoid rule with this many nodes instead of
            the adaptive contour integral

    Raises:
        CumulantError: if the measure, Φ±, observation points or contour do not fit
        NekrasovContractError: if ``theta_branch`` does not match θ
        QuadratureNotConverged: propagated from a contour integral
        MeasureRefused: if the measure itself cannot be normalized
    """
    branch = resolve_branch(spec.theta, theta_branch)
    _check_measure(spec, phi_plus, phi_minus)
    obs.validate(spec)
    if obs.total > MAX_OBSERVATIONS:
        raise CumulantError(f"at most {MAX_OBSERVATIONS} observation points, got {obs.total}")
    contour = contour or default_contour(spec, obs.L)
    _check_contour(spec, obs, v, contour)

    ensemble = build_ensemble(spec)
    integrands = _LoopIntegrands(spec, ensemble, obs, v, phi_plus, phi_minus, branch)
    tasks = _terms(spec, obs)
    logger.info(
        f"Loop equation (N={spec.N}, k={spec.k}, M={spec.M}, θ={spec.theta}, branch={branch}): "
        f"{obs.total} observation points, {len(tasks)} terms"
    )

    def integrate(task) -> LoopTerm:
        group, level, key = task
        f = integrands.integrand(group, level, key)
        if fixed_nodes is not None:
            value, nodes = trapezoid_estimate(f, replace(contour, nodes=fixed_nodes)), fixed_nodes
        else:
            result = contour_integral(f, contour, adaptive_tol=quadrature_tol, max_nodes=max_nodes)
            value, nodes = result.value, result.node_count_used
        logger.debug(f"Loop term {group} level={level} F=({key.label}): {value:.6e} ({nodes} nodes)")
        return LoopTerm(group, level, key, value, nodes)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        terms = list(pool.map(integrate, tasks))

    report = LoopEquationReport(branch, obs.L, complex(v), tol, quadrature_tol, terms)
    if report.passed:
        logger.info(f"Loop equation holds: |total| {report.residual:.3e}, largest term {report.max_term:.3e}")
    else:
        logger.warning(f"Loop equation fails: |total| {report.residual:.3e}, largest term {report.max_term:.3e}")
    return report
