from src.core.types import (
    Cpn1Model,
    FullTensorModel,
    SignalPartition,
    SignalVector,
    derivative_name,
)
from src.core.cpn1 import (
    compose,
    eval_factors,
    eval_residual,
    lift_residuals,
    merge_duplicate_factors,
    project_lifts,
    random_model,
    residual_norm,
    scaled_residual,
    sparsity_report,
)
from src.core.full_tensor import contract_full, to_full_tensor

__all__ = [
    "Cpn1Model",
    "FullTensorModel",
    "SignalPartition",
    "SignalVector",
    "derivative_name",
    "compose",
    "eval_factors",
    "eval_residual",
    "lift_residuals",
    "merge_duplicate_factors",
    "project_lifts",
    "random_model",
    "residual_norm",
    "scaled_residual",
    "sparsity_report",
    "contract_full",
    "to_full_tensor",
]
