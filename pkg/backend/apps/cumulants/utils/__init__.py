from .algebra import (
    CumulantError,
    MAX_VARIABLES,
    set_partitions,
    joint_moment,
    cumulant_from_moments,
    moment_from_cumulants,
    cumulant_table,
    moment_table,
    verify_product_formula,
)
from .observables import (
    ObservableSet,
    CumulantKey,
    DeformationRefused,
    stieltjes,
    stieltjes_values,
    stieltjes_variables,
    deformation_factors,
    deformed_expectation,
    deformation_derivative,
    exact_cumulant,
)
from .loop_equations import (
    LoopTerm,
    LoopEquationReport,
    krawtchouk_loop_setup,
    default_contour,
    default_observations,
    verify_discrete_loop_equation,
)

__all__ = [
    "CumulantError",
    "MAX_VARIABLES",
    "set_partitions",
    "joint_moment",
    "cumulant_from_moments",
    "moment_from_cumulants",
    "cumulant_table",
    "moment_table",
    "verify_product_formula",
    "ObservableSet",
    "CumulantKey",
    "DeformationRefused",
    "stieltjes",
    "stieltjes_values",
    "stieltjes_variables",
    "deformation_factors",
    "deformed_expectation",
    "deformation_derivative",
    "exact_cumulant",
    "LoopTerm",
    "LoopEquationReport",
    "krawtchouk_loop_setup",
    "default_contour",
    "default_observations",
    "verify_discrete_loop_equation",
]
