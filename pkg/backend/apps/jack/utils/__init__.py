from .partitions import Partition, PartitionError
from .specializations import (
    jack_principal,
    log_jack_principal,
    skew_jack_one,
    dual_jack_principal,
    log_dual_jack_principal,
    dual_correction,
    weyl_dimension,
)
from .identities import (
    BranchingCheck,
    CauchyCheck,
    JackContractError,
    verify_branching,
    verify_cauchy,
    cauchy_shells,
)

__all__ = [
    "Partition",
    "PartitionError",
    "jack_principal",
    "log_jack_principal",
    "skew_jack_one",
    "dual_jack_principal",
    "log_dual_jack_principal",
    "dual_correction",
    "weyl_dimension",
    "BranchingCheck",
    "JackContractError",
    "CauchyCheck",
    "verify_branching",
    "verify_cauchy",
    "cauchy_shells",
]
