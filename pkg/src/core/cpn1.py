"""
Evaluation and composition of CPN1 models.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import DimensionError, ModelFormatError, UnknownSignalError
from src.core.types import Cpn1Model, SignalPartition, SignalVector

logger = logging.getLogger(__name__)

PointLike = Union[SignalVector, np.ndarray, Sequence[float]]

# precedence when two parts see the same signal in different roles
_ROLE_RANK = {"input": 0, "algebraic": 1, "output": 2, "state": 3}


def as_values(model: Cpn1Model, v: PointLike) -> np.ndarray:
    """Return the raw value array of v after checking it against the model partition."""
    if isinstance(v, SignalVector):
        if v.partition != model.partition:
            raise DimensionError(
                f"signal vector partition ({v.partition.n_v} signals) does not match "
                f"model partition ({model.partition.n_v} signals)"
            )
        return v.values
    values = np.asarray(v, dtype=float).reshape(-1)
    if values.shape[0] != model.partition.n_v:
        raise DimensionError(
            f"got {values.shape[0]} signal values, model has {model.partition.n_v} signals"
        )
    return values


def factor_matrix(model: Cpn1Model, values: np.ndarray) -> np.ndarray:
    """Affine factors f_ir = 1 - |S_ir| + S_ir v_i as an N_v x R array."""
    s = model.s_struct
    return 1.0 - np.abs(s) + s * values[:, None]


def eval_factors(model: Cpn1Model, v: PointLike) -> np.ndarray:
    values = as_values(model, v)
    return np.prod(factor_matrix(model, values), axis=0)


def eval_residual(model: Cpn1Model, v: PointLike) -> np.ndarray:
    """h(v) = phi s(v); a point is consistent when this vanishes."""
    return model.phi @ eval_factors(model, v)


def scaled_residual(model: Cpn1Model, v: PointLike) -> np.ndarray:
    """
    Residual divided per equation by max(1, sum_r |phi_ir s_r(v)|), the size of
    the terms that cancel in that row.
    """
    terms = model.phi * eval_factors(model, v)[None, :]
    scale = np.maximum(1.0, np.abs(terms).sum(axis=1))
    return terms.sum(axis=1) / scale


def residual_norm(model: Cpn1Model, v: PointLike) -> float:
    return float(np.max(np.abs(scaled_residual(model, v)), initial=0.0))


def _roles(partition: SignalPartition) -> Dict[str, str]:
    roles = {}
    for name in partition.names[partition.n:]:
        roles[name] = partition.role(name)
    return roles


def compose(
    models: Sequence[Cpn1Model],
    links: Sequence[Tuple[str, str]] = (),
    inputs: Sequence[str] = (),
) -> Cpn1Model:
    """
    Stack models block-diagonally over a unified signal partition.

    Signals with the same name are the same signal and defined signals keep the
    order of the parts defining them. A signal defined by one part
    (state, output or algebraic) and read by another (input) becomes the defined
    kind in the composite. Every link (a, b) adds the equation 0 = a - b and turns
    an input b into an algebraic variable.

    Args:
        models: parts to stack, in equation order
        links: (source, target) signal pairs
        inputs: inputs placed first, in this order, and carried even if no part
            reads them

    Returns:
        The composite Cpn1Model
    """
    roles: Dict[str, str] = {}
    defined: List[str] = []
    read: List[str] = list(inputs)
    for name in inputs:
        roles[name] = "input"
    for model in models:
        for name, role in _roles(model.partition).items():
            current = roles.get(name)
            if current is None:
                roles[name] = role
                (read if role == "input" else defined).append(name)
                continue
            if current != "input" and role != "input":
                raise ModelFormatError(
                    f"signal '{name}' is defined by more than one part ({current}, {role})"
                )
            if _ROLE_RANK[role] > _ROLE_RANK[current]:
                roles[name] = role
                defined.append(name)

    targets: List[str] = []
    for source, target in links:
        for name in (source, target):
            if name not in roles:
                raise UnknownSignalError(name, "composition")
        if target in targets:
            raise ModelFormatError(f"signal '{target}' is linked more than once")
        targets.append(target)
        if roles[target] == "input":
            roles[target] = "algebraic"
            defined.append(target)

    grouped = {role: [name for name in defined if roles[name] == role] for role in _ROLE_RANK}
    grouped["input"] = [name for name in read if roles[name] == "input"]
    partition = SignalPartition.from_groups(
        states=grouped["state"],
        inputs=grouped["input"],
        outputs=grouped["output"],
        algebraics=grouped["algebraic"],
    )

    n_eq = sum(model.n_eq for model in models) + len(links)
    r_total = sum(model.r for model in models) + 2 * len(links)
    phi = np.zeros((n_eq, r_total))
    s = np.zeros((partition.n_v, r_total))
    row, col = 0, 0
    equations: List[str] = []
    lifts: List[Tuple[str, str]] = []
    for model in models:
        rows = [partition.index(name) for name in model.partition.names]
        phi[row:row + model.n_eq, col:col + model.r] = model.phi
        s[np.ix_(rows, np.arange(col, col + model.r))] = model.s_struct
        row += model.n_eq
        col += model.r
        equations.extend(model.equations)
        lifts.extend(pair for pair in model.lifts if pair not in lifts)
    for source, target in links:
        s[partition.index(source), col] = 1.0
        s[partition.index(target), col + 1] = 1.0
        phi[row, col] = 1.0
        phi[row, col + 1] = -1.0
        equations.append(f"link {source}->{target}")
        row += 1
        col += 2

    logger.debug(
        "composed %d parts: n=%d m=%d p=%d q=%d R=%d",
        len(models), partition.n, partition.m, partition.p, partition.q, r_total,
    )
    return Cpn1Model(partition, phi, s, tuple(lifts), tuple(equations))


def merge_duplicate_factors(model: Cpn1Model) -> Cpn1Model:
    """Merge factor columns with identical structure by summing their coefficients."""
    keys: Dict[bytes, int] = {}
    mapping = np.empty(model.r, dtype=int)
    for r in range(model.r):
        key = model.s_struct[:, r].tobytes()
        mapping[r] = keys.setdefault(key, len(keys))
    phi = np.zeros((model.n_eq, len(keys)))
    np.add.at(phi.T, mapping, model.phi.T)
    first = [int(np.flatnonzero(mapping == j)[0]) for j in range(len(keys))]
    return Cpn1Model(
        model.partition, phi, model.s_struct[:, first], model.lifts, model.equations
    )


@dataclass
class SparsityReport:
    r: int
    n_v: int
    n_phi: int
    phi_nonzeros: int
    s_nonzeros: int
    factor_degrees: List[int]

    def as_dict(self) -> dict:
        return {
            "R": self.r,
            "N_v": self.n_v,
            "N_phi": self.n_phi,
            "phi_nonzeros": self.phi_nonzeros,
            "s_nonzeros": self.s_nonzeros,
            "factor_degrees": self.factor_degrees,
        }


def sparsity_report(model: Cpn1Model) -> SparsityReport:
    degrees = np.count_nonzero(model.s_struct, axis=0)
    return SparsityReport(
        r=model.r,
        n_v=model.partition.n_v,
        n_phi=model.n_eq,
        phi_nonzeros=int(np.count_nonzero(model.phi)),
        s_nonzeros=int(np.count_nonzero(model.s_struct)),
        factor_degrees=[int(d) for d in degrees],
    )


def project_lifts(model: Cpn1Model, values: np.ndarray) -> np.ndarray:
    """Scale every (cos, sin) lift pair back onto the unit circle."""
    values = np.array(values, dtype=float)
    for cos_name, sin_name in model.lifts:
        i, j = model.partition.index(cos_name), model.partition.index(sin_name)
        radius = np.hypot(values[i], values[j])
        if radius > 0:
            values[i] /= radius
            values[j] /= radius
    return values


def lift_residuals(model: Cpn1Model, values: np.ndarray) -> np.ndarray:
    """g(z) = z_cos^2 + z_sin^2 - 1 for every registered lift."""
    out = np.empty(len(model.lifts))
    for k, (cos_name, sin_name) in enumerate(model.lifts):
        zc = values[model.partition.index(cos_name)]
        zs = values[model.partition.index(sin_name)]
        out[k] = zc * zc + zs * zs - 1.0
    return out


def random_model(
    n: int,
    m: int,
    p: int,
    q: int,
    r: int,
    rng: Optional[np.random.Generator] = None,
    density: float = 0.4,
    binary: bool = False,
) -> Cpn1Model:
    """
    Random CPN1 model with N_phi = n + p + q equations, used by the oracle tests.

    Args:
        binary: draw structure entries from {0, 1} instead of [-1, 1]
    """
    rng = rng or np.random.default_rng()
    partition = SignalPartition.from_groups(
        states=[f"x{i}" for i in range(n)],
        inputs=[f"u{i}" for i in range(m)],
        outputs=[f"y{i}" for i in range(p)],
        algebraics=[f"a{i}" for i in range(q)],
    )
    mask = rng.random((partition.n_v, r)) < density
    if binary:
        s = mask.astype(float)
    else:
        s = np.where(mask, rng.uniform(-1.0, 1.0, (partition.n_v, r)), 0.0)
    phi = rng.standard_normal((n + p + q, r))
    return Cpn1Model(partition, phi, s)
