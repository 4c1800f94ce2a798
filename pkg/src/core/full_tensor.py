"""
Dense parameter-tensor oracle for small models.

Axis k of the tensor belongs to signal k of the partition; index 0 on that axis
selects the constant 1 and index 1 selects v_k. Flattening the monomial tensor in
C order therefore enumerates monomials with signal 0 as the most significant bit.
"""
import numpy as np

from src.core.cpn1 import PointLike, as_values
from src.core.errors import DimensionError, SizeGuardError
from src.core.types import Cpn1Model, FullTensorModel

MAX_FULL_SIGNALS = 16


def to_full_tensor(model: Cpn1Model) -> FullTensorModel:
    n_v = model.partition.n_v
    if n_v > MAX_FULL_SIGNALS:
        raise SizeGuardError(
            f"full tensor needs 2^{n_v} monomials per equation; limit is N_v <= {MAX_FULL_SIGNALS}"
        )
    entries = np.zeros((2,) * n_v + (model.n_eq,))
    for r in range(model.r):
        column = model.s_struct[:, r]
        rank_one = np.ones(())
        for s_ir in column:
            rank_one = np.multiply.outer(rank_one, [1.0 - abs(s_ir), s_ir])
        entries += rank_one[..., None] * model.phi[:, r]
    return FullTensorModel(entries, model.partition)


def monomial_tensor(values: np.ndarray) -> np.ndarray:
    """Rank-one tensor of all 2^N_v multilinear monomials of values."""
    tensor = np.ones(())
    for x in values:
        tensor = np.multiply.outer(tensor, [1.0, x])
    return tensor


def contract_full(tensor: FullTensorModel, v: PointLike) -> np.ndarray:
    """Contracted product of the parameter tensor with the monomial tensor of v."""
    values = np.asarray(v.values if hasattr(v, "values") else v, dtype=float).reshape(-1)
    if values.shape[0] != tensor.partition.n_v:
        raise DimensionError(
            f"got {values.shape[0]} signal values, tensor has {tensor.partition.n_v} signal axes"
        )
    out = tensor.entries
    for x in values:
        out = out[0] + x * out[1]
    return np.array(out, dtype=float).reshape(tensor.n_eq)


def full_residual(model: Cpn1Model, v: PointLike) -> np.ndarray:
    """Residual of model at v through the full tensor; oracle for eval_residual."""
    return contract_full(to_full_tensor(model), as_values(model, v))
