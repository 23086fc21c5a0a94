"""
The two Nekrasov functions R₁(z), R₂(z) of a discrete corners measure.

Each is a combination of exact expectations of particle products weighted by
the φ family, minus a boundary correction Res(z) with simple poles at −Nθ
and s_M = M + 1 − θ. For θ = 1 the θ/(1−θ) sum is replaced by its limit,
an expectation of resolvent differences.

The boundary indicators are decided on the integer λ's: ℓᴺ_N = −Nθ is
λᴺ_N = 0, ℓʲ_1 = s_M − 1 is λʲ_1 = M and ℓʲ_j = −jθ is λʲ_j = 0.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from apps.discrete.utils import MeasureSpec, PatternEnsemble, build_ensemble

from .families import AnalyticFamily, FamilyError, boundary_points

logger = logging.getLogger(__name__)

POLE_DISTANCE = 1e-12
BRANCHES = ("general", "one")


class PoleProximityError(Exception):
    """Raised when R is evaluated too close to a pole of one of its expectations."""
    pass


class NekrasovContractError(Exception):
    """Raised for an unknown side, a branch that does not match θ, or bad dimensions."""
    pass


@dataclass(frozen=True)
class ResidueTerm:
    """coefficient / (z − pole)."""
    pole: float
    coefficient: complex
    label: str

    def __call__(self, z):
        return self.coefficient / (np.asarray(z, dtype=complex) - self.pole)


def resolve_branch(theta: float, branch: Optional[str]) -> str:
    if branch is None:
        return "one" if theta == 1 else "general"
    if branch not in BRANCHES:
        raise NekrasovContractError(f"unknown branch {branch!r}, expected one of {BRANCHES}")
    if branch == "general" and theta == 1:
        raise NekrasovContractError("the general form needs θ ≠ 1, use the 'one' branch")
    if branch == "one" and theta != 1:
        raise NekrasovContractError(f"the θ = 1 form was requested with θ = {theta}")
    return branch


def _check_side(which: str):
    if which not in ("R1", "R2"):
        raise NekrasovContractError(f"unknown side {which!r}, expected 'R1' or 'R2'")


def _check_dims(spec: MeasureSpec, family: AnalyticFamily):
    if (spec.N, spec.k) != (family.N, family.k):
        raise FamilyError(
            f"family dims (N={family.N}, k={family.k}) do not match the measure (N={spec.N}, k={spec.k})"
        )


def pole_candidates(spec: MeasureSpec) -> np.ndarray:
    """All a − bθ with a ∈ [0, M+1], b ∈ [1, N]; every expectation pole is one of these."""
    a = np.arange(spec.M + 2)[:, None]
    b = np.arange(1, spec.N + 1)[None, :]
    return np.ravel(a - b * spec.theta)


def _ensure_away_from_poles(spec: MeasureSpec, z: np.ndarray):
    poles = pole_candidates(spec)
    distance = np.min(np.abs(z[:, None] - poles[None, :]), axis=1)
    if np.any(distance < POLE_DISTANCE):
        bad = z[np.argmin(distance)]
        raise PoleProximityError(f"z = {bad:.6g} lies within {POLE_DISTANCE:g} of an expectation pole")


def _masked_expectation(ensemble: PatternEnsemble, mask: np.ndarray, values) -> complex:
    """E[values · 1{mask}], with ``values`` only evaluated on the masked rows."""
    if not np.any(mask):
        return 0j
    rows = np.flatnonzero(mask)
    return complex(np.sum(ensemble.probs[rows] * values(rows)))


def _ratio_product(x: np.ndarray, num_shift: float, den_shift: float) -> np.ndarray:
    """Π over the last axis of (x + num_shift)/(x + den_shift); 1 for an empty axis."""
    if x.shape[-1] == 0:
        return np.ones(x.shape[:-1])
    return np.prod((x + num_shift) / (x + den_shift), axis=-1)


def residual_terms(spec: MeasureSpec, family: AnalyticFamily, which: str) -> Tuple[ResidueTerm, ...]:
    """
    The simple-pole terms of Res₁ or Res₂.

    The same expressions cover θ = 1: every θ-dependent factor reduces to the
    θ = 1 correction there.
    """
    _check_side(which)
    _check_dims(spec, family)
    ensemble = build_ensemble(spec)
    theta, N, k, M = spec.theta, spec.N, spec.k, spec.M
    left, s_m = boundary_points(theta, N, M)
    lam, ell = ensemble.lam, ensemble.ell
    phi = lambda j, x: complex(family.phi(which, j)(x))
    terms = []

    if which == "R1":
        value = _masked_expectation(
            ensemble,
            lam[N][:, N - 1] == 0,
            lambda rows: _ratio_product(ell[N][rows, : N - 1], (N + 1) * theta, N * theta),
        )
        terms.append(ResidueTerm(left, -theta * phi(N + 1, left) * value, f"top@{left:g}"))

        value = _masked_expectation(
            ensemble,
            lam[k][:, 0] == M,
            lambda rows: _ratio_product(s_m - ell[k][rows, 1:], theta - 1.0, -1.0),
        )
        terms.append(ResidueTerm(s_m, theta * phi(k, s_m) * value, f"bottom@{s_m:g}"))

        for j in range(k + 1, N + 1):
            value = _masked_expectation(
                ensemble,
                lam[j][:, 0] == M,
                lambda rows, j=j: _ratio_product(s_m - ell[j][rows, 1:], -theta, -1.0)
                * _ratio_product(s_m - ell[j - 1][rows], theta - 1.0, 0.0),
            )
            terms.append(ResidueTerm(s_m, theta * phi(j, s_m) * value, f"level{j}@{s_m:g}"))
    else:
        value = _masked_expectation(
            ensemble,
            lam[N][:, 0] == M,
            lambda rows: _ratio_product(s_m - ell[N][rows, 1:], theta - 1.0, -1.0),
        )
        terms.append(ResidueTerm(s_m, theta * phi(N + 1, s_m) * value, f"top@{s_m:g}"))

        value = _masked_expectation(
            ensemble,
            lam[k][:, k - 1] == 0,
            lambda rows: _ratio_product(ell[k][rows, : k - 1], (k + 1) * theta, k * theta),
        )
        terms.append(ResidueTerm(left, -theta * phi(k, left) * value, f"bottom@{left:g}"))

        for j in range(k + 1, N + 1):
            value = _masked_expectation(
                ensemble,
                lam[j][:, j - 1] == 0,
                lambda rows, j=j: _ratio_product(ell[j][rows, : j - 1], (j - 1) * theta + 1.0, j * theta)
                * _ratio_product(ell[j - 1][rows], j * theta, (j - 1) * theta + 1.0),
            )
            terms.append(ResidueTerm(left, -theta * phi(j, left) * value, f"level{j}@{left:g}"))
    return tuple(terms)


def evaluate_residual(terms: Sequence[ResidueTerm], z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    total = np.zeros(z.shape, dtype=complex)
    for term in terms:
        if term.coefficient != 0:
            total += term(z)
    return total


def _r1_terms(ensemble: PatternEnsemble, family: AnalyticFamily, z: np.ndarray, branch: str) -> np.ndarray:
    spec = ensemble.spec
    theta, N, k = spec.theta, spec.N, spec.k
    phi = lambda j: family.phi("R1", j)(z)
    total = phi(N + 1) * ensemble.expect_product(z, [(N, -theta, 0.0)])
    total += phi(k) * ensemble.expect_product(z, [(k, theta - 1.0, -1.0)])
    for j in range(k + 1, N + 1):
        if branch == "general":
            inner = ensemble.expect_product(z, [(j, -theta, -1.0), (j - 1, theta - 1.0, 0.0)])
            total += theta / (1.0 - theta) * phi(j) * inner
        else:
            inner = ensemble.expect_resolvent(z, j, -1.0) - ensemble.expect_resolvent(z, j - 1, 0.0)
            total += phi(j) * inner
    return total


def _r2_terms(ensemble: PatternEnsemble, family: AnalyticFamily, z: np.ndarray, branch: str) -> np.ndarray:
    spec = ensemble.spec
    theta, N, k = spec.theta, spec.N, spec.k
    phi = lambda j: family.phi("R2", j)(z)
    total = phi(N + 1) * ensemble.expect_product(z, [(N, theta - 1.0, -1.0)])
    total += phi(k) * ensemble.expect_product(z, [(k, (N - k - 1) * theta, (N - k) * theta)])
    for j in range(k + 1, N + 1):
        shift = (N - j) * theta
        if branch == "general":
            inner = ensemble.expect_product(
                z,
                [(j, shift + theta - 1.0, shift), (j - 1, shift, shift + theta - 1.0)],
            )
            total += theta / (1.0 - theta) * phi(j) * inner
        else:
            inner = ensemble.expect_resolvent(z, j - 1, shift) - ensemble.expect_resolvent(z, j, shift)
            total += phi(j) * inner
    return total


def eval_R(spec: MeasureSpec, family: AnalyticFamily, z, which: str, theta_branch: Optional[str] = None):
    """
    R₁ or R₂ at ``z`` (scalar or array).

    Args:
        spec: an enumerable measure
        family: a φ family with the same N, k
        z: evaluation point(s)
        which: 'R1' or 'R2'
        theta_branch: 'general', 'one' or None to pick from θ

    Raises:
        PoleProximityError: if some z is within 1e-12 of a candidate pole
        NekrasovContractError: on a bad side or a branch that does not match θ
    """
    _check_side(which)
    _check_dims(spec, family)
    branch = resolve_branch(spec.theta, theta_branch)
    scalar = np.ndim(z) == 0
    points = np.atleast_1d(np.asarray(z, dtype=complex))
    _ensure_away_from_poles(spec, points)

    ensemble = build_ensemble(spec)
    if which == "R1":
        values = _r1_terms(ensemble, family, points, branch)
    else:
        values = _r2_terms(ensemble, family, points, branch)
    values = values - evaluate_residual(residual_terms(spec, family, which), points)
    return complex(values[0]) if scalar else values


def eval_R1(spec: MeasureSpec, family: AnalyticFamily, z, theta_branch: Optional[str] = None):
    return eval_R(spec, family, z, "R1", theta_branch)


def eval_R2(spec: MeasureSpec, family: AnalyticFamily, z, theta_branch: Optional[str] = None):
    return eval_R(spec, family, z, "R2", theta_branch)


def diverging_constant(family: AnalyticFamily, theta: float, z, which: str) -> np.ndarray:
    """G^θ(z) = θ/(1−θ) · Σ_{j=k+1}^{N} φʲ(z), the part of R that blows up as θ → 1."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    total = np.zeros(z.shape, dtype=complex)
    for j in range(family.k + 1, family.N + 1):
        total += family.phi(which, j)(z)
    return theta / (1.0 - theta) * total


def single_level_R(spec: MeasureSpec, family: AnalyticFamily, z: complex, which: str) -> complex:
    """
    The one-level (N = k) Nekrasov function, summed pattern by pattern.

    R₁ = φ₁ᴺ⁺¹(z) E[Π (z−ℓ_p−θ)/(z−ℓ_p)] + φ₁ᴺ(z) E[Π (z−ℓ_p+θ−1)/(z−ℓ_p−1)] − Res₁(z)
    R₂ = φ₂ᴺ⁺¹(z) E[Π (z−ℓ_p+θ−1)/(z−ℓ_p−1)] + φ₂ᴺ(z) E[Π (z−ℓ_p−θ)/(z−ℓ_p)] − Res₂(z)
    """
    _check_side(which)
    if spec.N != spec.k:
        raise NekrasovContractError(f"single-level form needs N = k, got N={spec.N}, k={spec.k}")
    _check_dims(spec, family)
    theta, N, M = spec.theta, spec.N, spec.M
    left, s_m = boundary_points(theta, N, M)
    ensemble = build_ensemble(spec)
    outer = complex(family.phi(which, N + 1)(z))
    inner = complex(family.phi(which, N)(z))
    phi_outer_left = complex(family.phi(which, N + 1)(left))
    phi_outer_right = complex(family.phi(which, N + 1)(s_m))
    phi_inner_left = complex(family.phi(which, N)(left))
    phi_inner_right = complex(family.phi(which, N)(s_m))

    total = 0j
    for probability, lam, ell in zip(ensemble.probs, ensemble.lam[N], ensemble.ell[N]):
        repel = attract = 1.0 + 0j
        for x in ell:
            repel *= (z - x - theta) / (z - x)
            attract *= (z - x + theta - 1.0) / (z - x - 1.0)
        if which == "R1":
            total += probability * (outer * repel + inner * attract)
        else:
            total += probability * (outer * attract + inner * repel)

        at_left = at_right = 0j
        if lam[-1] == 0:
            at_left = -theta / (z - left)
            for x in ell[:-1]:
                at_left *= (x + (N + 1) * theta) / (x + N * theta)
        if lam[0] == M:
            at_right = theta / (z - s_m)
            for x in ell[1:]:
                at_right *= (s_m - x + theta - 1.0) / (s_m - x - 1.0)
        if which == "R1":
            total -= probability * (phi_outer_left * at_left + phi_inner_right * at_right)
        else:
            total -= probability * (phi_outer_right * at_right + phi_inner_left * at_left)
    return complex(total)
