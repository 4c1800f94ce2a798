"""
Linear descriptor state-space models extracted from CPN1 models.

The unknowns x = (z, y, alpha) of the descriptor system follow the partition
order; E carries the negated derivative columns of the Jacobian, so that
E dx = A x + B u + c around the operating point.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from src.core.cpn1 import eval_residual, residual_norm
from src.core.errors import DimensionError, NotEquilibriumError
from src.core.types import Cpn1Model, SignalPartition
from src.linearize.jacobian import OperatingPoint, PointLike, jacobian
from src.utils.config import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DescriptorSystem:
    """
    E dx = A x + B u + c with x = (z, y, alpha) and u the model inputs.

    Args:
        partition: signal layout of the model the system was extracted from
        c: affine forcing, zero at an equilibrium
    """

    e: np.ndarray
    a: np.ndarray
    b: np.ndarray
    partition: SignalPartition
    point: Optional[OperatingPoint] = None
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.e, dtype=float))
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(a.shape[0], -1)
        if e.shape != a.shape or e.shape[0] != e.shape[1]:
            raise DimensionError(f"E {e.shape} and A {a.shape} must be square and equal")
        part = self.partition
        dim = part.n + part.p + part.q
        if a.shape[0] != dim or b.shape[1] != part.m:
            raise DimensionError(
                f"system of dimension {a.shape[0]} with {b.shape[1]} inputs does not match "
                f"partition (n + p + q = {dim}, m = {part.m})"
            )
        c = np.zeros(dim) if self.c is None else np.asarray(self.c, dtype=float).reshape(dim)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def names(self) -> Tuple[str, ...]:
        part = self.partition
        return part.states + part.outputs + part.algebraics

    @property
    def inputs(self) -> Tuple[str, ...]:
        return self.partition.inputs

    def rank_e(self, tol: Optional[float] = None) -> int:
        return int(np.linalg.matrix_rank(self.e, tol=tol))

    def is_affine(self) -> bool:
        return bool(np.any(self.c != 0.0))


def _require_equilibrium(model: Cpn1Model, values: np.ndarray, tol: float) -> None:
    part = model.partition
    residual = residual_norm(model, values)
    rates = float(np.max(np.abs(values[part.derivative_slice]), initial=0.0))
    norm = max(residual, rates)
    if norm > tol:
        raise NotEquilibriumError(norm, tol)


def extract_ldss(
    model: Cpn1Model,
    point: PointLike,
    tol: Optional[float] = None,
    require_equilibrium: bool = True,
) -> DescriptorSystem:
    """
    Linearize around a point and split the Jacobian into (E, A, B).

    Args:
        tol: equilibrium tolerance on the term-scaled residual and |dz|;
            defaults to MLSTAB_EQ_TOL
        require_equilibrium: when False the residual at the point is kept as the
            affine forcing c instead of being rejected

    Raises:
        NotEquilibriumError: the point does not satisfy h(v) = 0 with dz = 0
    """
    if not model.is_square:
        part = model.partition
        raise DimensionError(
            f"model has {model.n_eq} equations for {part.n + part.p + part.q} unknowns"
        )
    result = jacobian(model, point)
    values = result.point.values
    tol = get_settings().eq_tol if tol is None else tol
    c = None
    if require_equilibrium:
        _require_equilibrium(model, values, tol)
    else:
        c = eval_residual(model, values)

    part = model.partition
    j = result.j
    unknown = part.unknown_indices()
    e = np.zeros((model.n_eq, unknown.size))
    e[:, :part.n] = -j[:, part.derivative_slice]
    a = j[:, unknown]
    b = j[:, part.input_slice]
    logger.debug("extracted LDSS of dimension %d, rank(E) = %d", a.shape[0], np.linalg.matrix_rank(e))
    return DescriptorSystem(e, a, b, part, result.point, c)


def descriptor_to_model(sys: DescriptorSystem) -> Cpn1Model:
    """
    Linear iMTI model 0 = -E dx + A x + B u + c over the deviation signals.

    Only the state columns of E may be nonzero, since algebraic variables have
    no derivative slot.
    """
    part = sys.partition
    if np.any(sys.e[:, part.n:] != 0.0):
        raise DimensionError("E has nonzero columns outside the state block")
    phi = np.zeros((sys.dim, part.n_v + 1))
    phi[:, part.derivative_slice] = -sys.e[:, :part.n]
    phi[:, part.state_slice] = sys.a[:, :part.n]
    phi[:, part.input_slice] = sys.b
    phi[:, 2 * part.n + part.m:part.n_v] = sys.a[:, part.n:]
    phi[:, -1] = sys.c
    s = np.zeros((part.n_v, part.n_v + 1))
    s[:, :part.n_v] = np.eye(part.n_v)
    return Cpn1Model(part, phi, s, equations=tuple(f"linear{i}" for i in range(sys.dim)))


def linear_model(
    a: np.ndarray,
    b: Optional[np.ndarray] = None,
    states: Optional[Sequence[str]] = None,
    inputs: Optional[Sequence[str]] = None,
) -> Cpn1Model:
    """0 = -dz + A z + B u as a CPN1 model."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    b = np.zeros((n, 0)) if b is None else np.asarray(b, dtype=float).reshape(n, -1)
    states = list(states) if states is not None else [f"x{i}" for i in range(n)]
    inputs = list(inputs) if inputs is not None else [f"u{i}" for i in range(b.shape[1])]
    part = SignalPartition.from_groups(states=states, inputs=inputs)
    return descriptor_to_model(DescriptorSystem(np.eye(n), a, b, part))
