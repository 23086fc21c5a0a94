from .spec import (
    ContinuousSpec,
    ContinuousSpecError,
    log_density,
    log_density_batch,
    is_valid,
    initial_stack,
)
from .dixon import (
    DixonAndersonResult,
    ProjectionProbe,
    jacobi_tensor_rule,
    dixon_anderson_closed_form,
    verify_dixon_anderson,
    project_lower_level,
    projection_consistency,
)
from .sampler import SampleBatch, sample, resolve_seed, conditional_is_uniform, GRID_POINTS
from .statistics import estimate_cumulant, evaluate_functional, batch_spread, DEFAULT_BATCHES
from .loop_equations import (
    ContinuousLoopReport,
    default_contour,
    default_points,
    s_functional,
    stieltjes_transforms,
    verify_continuous_loop_equation,
    doubling_check,
    residual_sequence,
)
from .diffuse import (
    DiffuseLimitReport,
    DiffuseLimitRow,
    diffuse_limit_experiment,
    discrete_spec,
    rescale_level,
    scaled_top_weight,
    continuous_moments_quadrature,
)
from .storage import write_batch, read_batch, sidecar_path

__all__ = [
    "ContinuousSpec",
    "ContinuousSpecError",
    "log_density",
    "log_density_batch",
    "is_valid",
    "initial_stack",
    "DixonAndersonResult",
    "ProjectionProbe",
    "jacobi_tensor_rule",
    "dixon_anderson_closed_form",
    "verify_dixon_anderson",
    "project_lower_level",
    "projection_consistency",
    "SampleBatch",
    "sample",
    "resolve_seed",
    "conditional_is_uniform",
    "GRID_POINTS",
    "estimate_cumulant",
    "evaluate_functional",
    "batch_spread",
    "DEFAULT_BATCHES",
    "ContinuousLoopReport",
    "default_contour",
    "default_points",
    "s_functional",
    "stieltjes_transforms",
    "verify_continuous_loop_equation",
    "doubling_check",
    "residual_sequence",
    "DiffuseLimitReport",
    "DiffuseLimitRow",
    "diffuse_limit_experiment",
    "discrete_spec",
    "rescale_level",
    "scaled_top_weight",
    "continuous_moments_quadrature",
    "write_batch",
    "read_batch",
    "sidecar_path",
]
