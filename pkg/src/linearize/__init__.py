from src.linearize.jacobian import (
    JacobianResult,
    OperatingPoint,
    OperationCount,
    chain_rule_jacobian,
    finite_difference_jacobian,
    finite_difference_operations,
    jacobian,
    jacobian_operations,
    residual_operations,
)
from src.linearize.ldss import DescriptorSystem, descriptor_to_model, extract_ldss, linear_model

__all__ = [
    "JacobianResult",
    "OperatingPoint",
    "OperationCount",
    "chain_rule_jacobian",
    "finite_difference_jacobian",
    "finite_difference_operations",
    "jacobian",
    "jacobian_operations",
    "residual_operations",
    "DescriptorSystem",
    "descriptor_to_model",
    "extract_ldss",
    "linear_model",
]
