from .patterns import (
    Signature,
    ShiftedLevel,
    CornersPattern,
    PatternKey,
    StateSpaceContractError,
    interlaces,
    shifted_positions,
)
from .enumeration import (
    enumerate_signatures,
    enumerate_patterns,
    enumerate_pattern_keys,
    interlacing_children,
    signature_count,
    completion_count,
    pattern_count,
)
from .lattice import exact_theta, lattice_value, shifted_value

__all__ = [
    "Signature",
    "ShiftedLevel",
    "CornersPattern",
    "PatternKey",
    "StateSpaceContractError",
    "interlaces",
    "shifted_positions",
    "enumerate_signatures",
    "enumerate_patterns",
    "enumerate_pattern_keys",
    "interlacing_children",
    "signature_count",
    "completion_count",
    "pattern_count",
    "exact_theta",
    "lattice_value",
    "shifted_value",
]
