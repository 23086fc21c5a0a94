from .families import (
    PhiFunction,
    AnalyticFamily,
    CompatibilityViolation,
    FamilyError,
    krawtchouk_family,
    geometric_family,
    geometric_setup,
    derive_weights,
    boundary_points,
    lattice_ratio,
)
from .functions import (
    ResidueTerm,
    PoleProximityError,
    NekrasovContractError,
    eval_R,
    eval_R1,
    eval_R2,
    residual_terms,
    evaluate_residual,
    diverging_constant,
    single_level_R,
    pole_candidates,
    resolve_branch,
)
from .certify import (
    PoleCandidate,
    AnalyticityReport,
    ContinuityReport,
    candidate_poles,
    cluster_candidates,
    certify_analyticity,
    theta_continuity,
)
from .bijections import BijectionReport, check_bijection, check_all_bijections

__all__ = [
    "PhiFunction",
    "AnalyticFamily",
    "CompatibilityViolation",
    "FamilyError",
    "krawtchouk_family",
    "geometric_family",
    "geometric_setup",
    "derive_weights",
    "boundary_points",
    "lattice_ratio",
    "ResidueTerm",
    "PoleProximityError",
    "NekrasovContractError",
    "eval_R",
    "eval_R1",
    "eval_R2",
    "residual_terms",
    "evaluate_residual",
    "diverging_constant",
    "single_level_R",
    "pole_candidates",
    "resolve_branch",
    "PoleCandidate",
    "AnalyticityReport",
    "ContinuityReport",
    "candidate_poles",
    "cluster_candidates",
    "certify_analyticity",
    "theta_continuity",
    "BijectionReport",
    "check_bijection",
    "check_all_bijections",
]
