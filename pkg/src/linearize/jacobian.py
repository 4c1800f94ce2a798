"""
Analytic Jacobian of a CPN1 model.

For factor column r with affine factors f_ir the partial derivative of the
product s_r with respect to v_i is S_ir times the product of the other factors.
Columns with one vanishing factor only depend on that factor's signal; columns
with two or more vanishing factors have zero derivative everywhere.
"""
import logging
from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple, Union

import numpy as np

from src.core.cpn1 import as_values, eval_residual, factor_matrix
from src.core.errors import DimensionError, ModelFormatError
from src.core.types import Cpn1Model, SignalPartition, SignalVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OperatingPoint:
    v_bar: SignalVector

    def __post_init__(self):
        if not np.all(np.isfinite(self.v_bar.values)):
            raise ModelFormatError("operating point contains NaN or Inf")

    @classmethod
    def from_values(cls, partition: SignalPartition, values) -> "OperatingPoint":
        return cls(SignalVector(values, partition))

    @classmethod
    def from_mapping(cls, partition: SignalPartition, values: Mapping[str, float]) -> "OperatingPoint":
        return cls(SignalVector.from_mapping(partition, values))

    @property
    def partition(self) -> SignalPartition:
        return self.v_bar.partition

    @property
    def values(self) -> np.ndarray:
        return self.v_bar.values


@dataclass(frozen=True, eq=False)
class JacobianResult:
    j: np.ndarray
    point: OperatingPoint
    names: Tuple[str, ...]

    def column(self, name: str) -> np.ndarray:
        return self.j[:, self.point.partition.index(name)]

    def columns(self, names: Sequence[str]) -> np.ndarray:
        idx = [self.point.partition.index(name) for name in names]
        return self.j[:, idx]


PointLike = Union[OperatingPoint, SignalVector, np.ndarray, Sequence[float]]


def _point_values(model: Cpn1Model, point: PointLike) -> np.ndarray:
    if isinstance(point, OperatingPoint):
        point = point.v_bar
    values = as_values(model, point)
    if not np.all(np.isfinite(values)):
        raise ModelFormatError("operating point contains NaN or Inf")
    return values


def factor_gradients(model: Cpn1Model, values: np.ndarray) -> np.ndarray:
    """N_v x R matrix of d s_r / d v_i, the D-matrix scaled column-wise by the factor products."""
    s = model.s_struct
    f = factor_matrix(model, values)
    zero = f == 0.0
    zeros = zero.sum(axis=0)
    prod_nonzero = np.prod(np.where(zero, 1.0, f), axis=0)
    g = np.zeros_like(f)

    full = zeros == 0
    if np.any(full):
        g[:, full] = s[:, full] * (prod_nonzero[full] / f[:, full])
    single = np.flatnonzero(zeros == 1)
    if single.size:
        rows = np.argmax(zero[:, single], axis=0)
        g[rows, single] = s[rows, single] * prod_nonzero[single]
    return g


def jacobian_matrix(model: Cpn1Model, values: np.ndarray) -> np.ndarray:
    return model.phi @ factor_gradients(model, values).T


def jacobian(model: Cpn1Model, point: PointLike) -> JacobianResult:
    """
    Jacobian of h = phi s(v) at a point, one column per signal.

    Returns:
        JacobianResult with J of shape N_phi x N_v
    """
    values = _point_values(model, point)
    if not isinstance(point, OperatingPoint):
        point = OperatingPoint.from_values(model.partition, values)
    return JacobianResult(jacobian_matrix(model, values), point, model.partition.names)


def finite_difference_jacobian(
    model: Cpn1Model,
    point: PointLike,
    step: float = 1e-6,
) -> np.ndarray:
    """Central differences of eval_residual, scaled per signal magnitude."""
    values = _point_values(model, point)
    j = np.empty((model.n_eq, values.size))
    for i in range(values.size):
        delta = step * max(1.0, abs(values[i]))
        plus, minus = values.copy(), values.copy()
        plus[i] += delta
        minus[i] -= delta
        j[:, i] = (eval_residual(model, plus) - eval_residual(model, minus)) / (2.0 * delta)
    return j


@dataclass(frozen=True)
class OperationCount:
    """
    Floating point operations of one evaluation, counted over the nonzero
    entries of phi and S (entries with S_ir = 0 contribute a factor of one).
    """

    factors: int
    products: int
    gradients: int
    contraction: int

    @property
    def total(self) -> int:
        return self.factors + self.products + self.gradients + self.contraction


def _column_counts(model: Cpn1Model) -> Tuple[np.ndarray, np.ndarray]:
    return np.count_nonzero(model.s_struct, axis=0), np.count_nonzero(model.phi, axis=0)


def residual_operations(model: Cpn1Model) -> OperationCount:
    degree, rows = _column_counts(model)
    return OperationCount(
        factors=2 * int(degree.sum()),
        products=int(np.maximum(degree - 1, 0).sum()),
        gradients=0,
        contraction=2 * int(rows.sum()),
    )


def jacobian_operations(model: Cpn1Model) -> OperationCount:
    """Cost of the analytic Jacobian: one factor pass, then S_ir times the other factors per entry."""
    degree, rows = _column_counts(model)
    return OperationCount(
        factors=2 * int(degree.sum()),
        products=int(np.maximum(degree - 1, 0).sum()),
        gradients=int(degree.sum()),
        contraction=2 * int((rows * degree).sum()),
    )


def finite_difference_operations(model: Cpn1Model) -> OperationCount:
    """Cost of central differences: two residuals per signal plus one difference quotient per entry."""
    one = residual_operations(model)
    calls = 2 * model.partition.n_v
    return OperationCount(
        factors=calls * one.factors,
        products=calls * one.products,
        gradients=2 * model.n_eq * model.partition.n_v,
        contraction=calls * one.contraction,
    )


def chain_rule_jacobian(j_lift: Union[JacobianResult, np.ndarray], j_inner: np.ndarray) -> np.ndarray:
    """Jacobian of the composed map: J_lift evaluated at f(x) times J_f(x)."""
    outer = j_lift.j if isinstance(j_lift, JacobianResult) else np.asarray(j_lift, dtype=float)
    inner = np.asarray(j_inner, dtype=float)
    if inner.ndim != 2 or outer.shape[1] != inner.shape[0]:
        raise DimensionError(
            f"cannot chain a {outer.shape} lift Jacobian with a {inner.shape} inner Jacobian"
        )
    return outer @ inner
