"""
Executable form of the residue cancellation behind the analyticity of R₁, R₂.

For a candidate pole s and a particle index i, the patterns contributing a
simple pole at s are split into a "plus" family and a "minus" family, one
set per level. A shift map sends every plus pair (ℓ, n) to a minus pair
(ℓ̃, ñ) whose residue contribution is exactly the negative of (ℓ, n)'s:

* b1 (for R₁) lowers λᵐ_i on the longest run of equal values ending at level n;
* b2 (for R₂) lowers λᵐ_{m−i+1} on the longest staircase of equal values
  starting at level n.

Pole-set membership is decided on exact rationals. The cancellation is then
checked numerically on the residue terms divided by θ.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from apps.discrete.utils import MeasureSpec, build_ensemble
from apps.state_space.utils import PatternKey, exact_theta

from .certify import PoleCandidate, candidate_poles
from .families import AnalyticFamily, boundary_points
from .functions import NekrasovContractError

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-10
VARIANTS = ("b1", "b2")


@dataclass
class BijectionReport:
    variant: str
    location: float
    a: int
    b: int
    i: int
    domain_size: int = 0
    codomain_size: int = 0
    injective: bool = True
    surjective: bool = True
    level_order: bool = True
    max_identity_gap: float = 0.0
    counterexamples: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            not self.counterexamples
            and self.injective
            and self.surjective
            and self.level_order
            and self.domain_size == self.codomain_size
        )

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "s": self.location,
            "a": self.a,
            "b": self.b,
            "i": self.i,
            "domain_size": self.domain_size,
            "codomain_size": self.codomain_size,
            "injective": self.injective,
            "surjective": self.surjective,
            "level_order": self.level_order,
            "max_identity_gap": self.max_identity_gap,
            "counterexamples": self.counterexamples,
            "passed": self.passed,
        }


class _Scan:
    """Exact lattice views of every pattern of a measure."""

    def __init__(self, spec: MeasureSpec, family: AnalyticFamily):
        self.spec = spec
        self.family = family
        self.ensemble = build_ensemble(spec)
        self.theta_q = exact_theta(spec.theta)
        self.index = {key: n for n, key in enumerate(self.ensemble.keys)}

    def ell_q(self, key: PatternKey, j: int, p: int) -> Fraction:
        return key[self.spec.N - j][p - 1] - p * self.theta_q

    def has_particle(self, key: PatternKey, j: int, target: Fraction) -> bool:
        return any(self.ell_q(key, j, p) == target for p in range(1, j + 1))

    def ell(self, key: PatternKey, j: int) -> np.ndarray:
        return np.asarray(key[self.spec.N - j], dtype=float) - self.spec.theta * np.arange(1, j + 1)

    def probability(self, key: PatternKey) -> complex:
        return complex(self.ensemble.probs[self.index[key]])

    def lowered(self, key: PatternKey, sites: List[Tuple[int, int]]) -> Optional[PatternKey]:
        """Lower λʲ_p by one at each (j, p); None if the result is not a pattern."""
        levels = [list(level) for level in key]
        for j, p in sites:
            levels[self.spec.N - j][p - 1] -= 1
        moved = tuple(tuple(level) for level in levels)
        return moved if moved in self.index else None


def _product(values: np.ndarray) -> complex:
    return complex(np.prod(values)) if values.size else 1.0 + 0j


class _B1:
    """Pole sets A±, map b1 and the R₁ residue terms."""

    def __init__(self, scan: _Scan, s: Fraction, i: int):
        self.scan, self.s, self.i = scan, s, i

    def plus(self, key, n) -> bool:
        scan, s, i, N = self.scan, self.s, self.i, self.scan.spec.N
        if i > n or scan.ell_q(key, n, i) != s:
            return False
        upper = N if n == N else n + 1
        return not scan.has_particle(key, upper, s - scan.theta_q)

    def minus(self, key, n) -> bool:
        scan, s, i, k = self.scan, self.s, self.i, self.scan.spec.k
        if i > n or scan.ell_q(key, n, i) != s - 1:
            return False
        lower = k if n == k else n - 1
        return not scan.has_particle(key, lower, s + scan.theta_q - 1)

    def image(self, key, n):
        k, i = self.scan.spec.k, self.i
        top = key[self.scan.spec.N - n][i - 1]
        target = k
        for m in range(n, max(i, k + 1) - 1, -1):
            below = key[self.scan.spec.N - m + 1]
            if i > len(below) or below[i - 1] < top:
                target = m
                break
        return self.scan.lowered(key, [(m, i) for m in range(target, n + 1)]), target

    def in_range(self, n, n_image) -> bool:
        return n_image <= n

    def plus_term(self, key, n) -> complex:
        scan, i, theta, N = self.scan, self.i, self.scan.spec.theta, self.scan.spec.N
        s = float(self.s)
        phi = complex(scan.family.phi("R1", n + 1)(s))
        own = np.delete(scan.ell(key, n), i - 1)
        if n == N:
            factor = _product((s - own - theta) / (s - own))
        else:
            upper = scan.ell(key, n + 1)
            factor = _product((s - upper - theta) / (s - upper - 1.0)) * _product(
                (s - own + theta - 1.0) / (s - own)
            )
        return -phi * scan.probability(key) * factor

    def minus_term(self, key, n) -> complex:
        scan, i, theta, k = self.scan, self.i, self.scan.spec.theta, self.scan.spec.k
        s = float(self.s)
        phi = complex(scan.family.phi("R1", n)(s))
        own = np.delete(scan.ell(key, n), i - 1)
        if n == k:
            factor = _product((s - own + theta - 1.0) / (s - own - 1.0))
        else:
            lower = scan.ell(key, n - 1)
            factor = _product((s - own - theta) / (s - own - 1.0)) * _product(
                (s - lower + theta - 1.0) / (s - lower)
            )
        return phi * scan.probability(key) * factor


class _B2:
    """Pole sets B±, map b2 and the R₂ residue terms."""

    def __init__(self, scan: _Scan, s: Fraction, i: int):
        self.scan, self.s, self.i = scan, s, i

    def _offset(self, n) -> Fraction:
        return (self.scan.spec.N - n) * self.scan.theta_q

    def plus(self, key, n) -> bool:
        scan, i, k = self.scan, self.i, self.scan.spec.k
        if i > n:
            return False
        target = self.s + self._offset(n)
        if scan.ell_q(key, n, n - i + 1) != target:
            return False
        if n == k:
            return not scan.has_particle(key, k, target - scan.theta_q)
        return not scan.has_particle(key, n - 1, target)

    def minus(self, key, n) -> bool:
        scan, i, N = self.scan, self.i, self.scan.spec.N
        if i > n:
            return False
        target = self.s + self._offset(n) - 1
        if scan.ell_q(key, n, n - i + 1) != target:
            return False
        if n == N:
            return not scan.has_particle(key, N, self.s + scan.theta_q - 1)
        return not scan.has_particle(key, n + 1, target)

    def image(self, key, n):
        N, i = self.scan.spec.N, self.i
        anchor = key[N - n][n - i]
        target = n
        for m in range(n + 1, N + 1):
            if key[N - m][m - i] != anchor:
                break
            target = m
        return self.scan.lowered(key, [(m, m - i + 1) for m in range(n, target + 1)]), target

    def in_range(self, n, n_image) -> bool:
        return n_image >= n

    def plus_term(self, key, n) -> complex:
        scan, i, theta = self.scan, self.i, self.scan.spec.theta
        N, k = scan.spec.N, scan.spec.k
        s = float(self.s)
        phi = complex(scan.family.phi("R2", n)(s))
        own = np.delete(scan.ell(key, n), n - i)
        if n == k:
            factor = _product((s - own + (N - k - 1) * theta) / (s - own + (N - k) * theta))
        else:
            shift = (N - n) * theta
            lower = scan.ell(key, n - 1)
            factor = _product((s - own + shift + theta - 1.0) / (s - own + shift)) * _product(
                (s - lower + shift) / (s - lower + shift + theta - 1.0)
            )
        return -phi * scan.probability(key) * factor

    def minus_term(self, key, n) -> complex:
        scan, i, theta, N = self.scan, self.i, self.scan.spec.theta, self.scan.spec.N
        s = float(self.s)
        phi = complex(scan.family.phi("R2", n + 1)(s))
        own = np.delete(scan.ell(key, n), n - i)
        if n == N:
            factor = _product((s - own + theta - 1.0) / (s - own - 1.0))
        else:
            shift = (N - n) * theta
            upper = scan.ell(key, n + 1)
            factor = _product((s - upper + shift - 1.0) / (s - upper + shift - theta)) * _product(
                (s - own + shift - theta) / (s - own + shift - 1.0)
            )
        return phi * scan.probability(key) * factor


def _run(scan: _Scan, variant: str, candidate: PoleCandidate, i: int, tol: float) -> BijectionReport:
    spec = scan.spec
    s = candidate.a - candidate.b * scan.theta_q
    sides = _B1(scan, s, i) if variant == "b1" else _B2(scan, s, i)
    report = BijectionReport(variant, candidate.location, candidate.a, candidate.b, i)

    levels = range(spec.k, spec.N + 1)
    domain = [(key, n) for key in scan.ensemble.keys for n in levels if sides.plus(key, n)]
    codomain = {(key, n) for key in scan.ensemble.keys for n in levels if sides.minus(key, n)}
    report.domain_size, report.codomain_size = len(domain), len(codomain)

    images: Dict[Tuple[PatternKey, int], Tuple[PatternKey, int]] = {}
    for key, n in domain:
        moved, n_image = sides.image(key, n)
        if moved is None or (moved, n_image) not in codomain:
            report.counterexamples.append(
                {"pattern": key, "level": n, "image": moved, "image_level": n_image, "reason": "image outside the minus set"}
            )
            continue
        if not sides.in_range(n, n_image):
            report.level_order = False
            report.counterexamples.append(
                {"pattern": key, "level": n, "image": moved, "image_level": n_image, "reason": "level ordering violated"}
            )
        if (moved, n_image) in images:
            report.injective = False
            report.counterexamples.append(
                {"pattern": key, "level": n, "image": moved, "image_level": n_image, "reason": "image hit twice"}
            )
        images[(moved, n_image)] = (key, n)

        plus = sides.plus_term(key, n)
        minus = sides.minus_term(moved, n_image)
        gap = abs(plus + minus)
        scale = max(abs(plus), abs(minus))
        if not np.isfinite(gap):
            report.counterexamples.append(
                {"pattern": key, "level": n, "image": moved, "image_level": n_image, "reason": "degenerate residue term"}
            )
            continue
        relative = gap / scale if scale > 0 else 0.0
        report.max_identity_gap = max(report.max_identity_gap, relative)
        if relative > tol:
            report.counterexamples.append(
                {
                    "pattern": key,
                    "level": n,
                    "image": moved,
                    "image_level": n_image,
                    "reason": f"cancellation fails: {plus:.6g} + {minus:.6g}",
                }
            )

    missed = codomain - set(images)
    if missed:
        report.surjective = False
        for key, n in sorted(missed)[:10]:
            report.counterexamples.append({"pattern": key, "level": n, "reason": "minus pair not reached"})
    return report


def check_bijection(
    spec: MeasureSpec,
    family: AnalyticFamily,
    variant: str,
    s: PoleCandidate,
    i: int,
    tol: float = IDENTITY_TOL,
) -> BijectionReport:
    """
    Build the plus and minus pole sets at (s, i), apply the shift map and
    check bijectivity, level ordering and every cancellation identity.

    Raises:
        NekrasovContractError: for θ = 1, a boundary point s, an unknown variant or i out of range
    """
    _check_request(spec, family, variant)
    if not 1 <= i <= spec.N:
        raise NekrasovContractError(f"particle index {i} outside [1, {spec.N}]")
    theta_q = exact_theta(spec.theta)
    exact = s.a - s.b * theta_q
    if exact in (-spec.N * theta_q, spec.M + 1 - theta_q):
        raise NekrasovContractError(f"s = {s.location:g} is a boundary point")
    report = _run(_Scan(spec, family), variant, s, i, tol)
    logger.debug(
        f"{variant} at s={s.location:.4f}, i={i}: |dom|={report.domain_size}, "
        f"|cod|={report.codomain_size}, passed={report.passed}"
    )
    return report


def check_all_bijections(
    spec: MeasureSpec,
    family: AnalyticFamily,
    variant: str,
    tol: float = IDENTITY_TOL,
    threads: Optional[int] = None,
) -> List[BijectionReport]:
    """check_bijection for every non-boundary candidate s and every i, in parallel."""
    _check_request(spec, family, variant)
    scan = _Scan(spec, family)
    left, right = -spec.N * scan.theta_q, spec.M + 1 - scan.theta_q
    jobs = []
    seen = set()
    for candidate in candidate_poles(spec):
        exact = candidate.a - candidate.b * scan.theta_q
        if exact in (left, right) or exact in seen:
            continue
        seen.add(exact)
        jobs.extend((candidate, i) for i in range(1, spec.N + 1))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        reports = list(pool.map(lambda job: _run(scan, variant, job[0], job[1], tol), jobs))
    failed = sum(not r.passed for r in reports)
    logger.info(f"{variant}: {len(reports)} (s, i) pairs checked, {failed} failed")
    return reports


def _check_request(spec: MeasureSpec, family: AnalyticFamily, variant: str):
    if variant not in VARIANTS:
        raise NekrasovContractError(f"unknown bijection {variant!r}, expected one of {VARIANTS}")
    if spec.theta == 1:
        raise NekrasovContractError("the bijection checks need θ ≠ 1")
    if (spec.N, spec.k) != (family.N, family.k):
        raise NekrasovContractError("family and measure dimensions differ")
