from .special import log_gamma, log_gamma_ratio, NumericsDomainError, NumericsContractError
from .quadrature import (
    ContourSpec,
    QuadratureResult,
    QuadratureNotConverged,
    IntegrandEvaluationError,
    contour_integral,
    trapezoid_estimate,
    DEFAULT_ADAPTIVE_TOL,
    DEFAULT_MAX_NODES,
)
from .differences import mixed_partial
from .rng import make_generator, spawn_generators

__all__ = [
    "log_gamma",
    "log_gamma_ratio",
    "NumericsDomainError",
    "NumericsContractError",
    "ContourSpec",
    "QuadratureResult",
    "QuadratureNotConverged",
    "IntegrandEvaluationError",
    "contour_integral",
    "trapezoid_estimate",
    "DEFAULT_ADAPTIVE_TOL",
    "DEFAULT_MAX_NODES",
    "mixed_partial",
    "make_generator",
    "spawn_generators",
]
