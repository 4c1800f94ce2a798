"""
Data types for implicit multilinear (iMTI) models in CPN1 format.

The signal vector is always ordered (dz, z, u, y, alpha): n derivative slots,
n states, m inputs, p outputs and q algebraic variables.
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DimensionError, ModelFormatError, UnknownSignalError

DERIVATIVE_PREFIX = "d_"


def derivative_name(state: str) -> str:
    return f"{DERIVATIVE_PREFIX}{state}"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class SignalPartition:
    n: int
    m: int
    p: int
    q: int
    names: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if min(self.n, self.m, self.p, self.q) < 0:
            raise ModelFormatError("signal counts must be nonnegative")
        if len(self.names) != self.n_v:
            raise DimensionError(
                f"partition expects {self.n_v} signal names, got {len(self.names)}"
            )
        if len(set(self.names)) != len(self.names):
            seen, dupes = set(), []
            for name in self.names:
                if name in seen:
                    dupes.append(name)
                seen.add(name)
            raise ModelFormatError(f"duplicate signal names: {', '.join(dupes)}")
        for i in range(self.n):
            state = self.names[self.n + i]
            if self.names[i] != derivative_name(state):
                raise ModelFormatError(
                    f"slot {i} must hold {derivative_name(state)}, got {self.names[i]}"
                )
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.names)})

    @classmethod
    def from_groups(
        cls,
        states: Sequence[str] = (),
        inputs: Sequence[str] = (),
        outputs: Sequence[str] = (),
        algebraics: Sequence[str] = (),
    ) -> "SignalPartition":
        names = (
            [derivative_name(s) for s in states]
            + list(states)
            + list(inputs)
            + list(outputs)
            + list(algebraics)
        )
        return cls(len(states), len(inputs), len(outputs), len(algebraics), tuple(names))

    @property
    def n_v(self) -> int:
        return 2 * self.n + self.m + self.p + self.q

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSignalError(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def derivative_slice(self) -> slice:
        return slice(0, self.n)

    @property
    def state_slice(self) -> slice:
        return slice(self.n, 2 * self.n)

    @property
    def input_slice(self) -> slice:
        return slice(2 * self.n, 2 * self.n + self.m)

    @property
    def output_slice(self) -> slice:
        start = 2 * self.n + self.m
        return slice(start, start + self.p)

    @property
    def algebraic_slice(self) -> slice:
        start = 2 * self.n + self.m + self.p
        return slice(start, start + self.q)

    @property
    def states(self) -> Tuple[str, ...]:
        return self.names[self.state_slice]

    @property
    def inputs(self) -> Tuple[str, ...]:
        return self.names[self.input_slice]

    @property
    def outputs(self) -> Tuple[str, ...]:
        return self.names[self.output_slice]

    @property
    def algebraics(self) -> Tuple[str, ...]:
        return self.names[self.algebraic_slice]

    def role(self, name: str) -> str:
        i = self.index(name)
        if i < self.n:
            return "derivative"
        if i < 2 * self.n:
            return "state"
        if i < 2 * self.n + self.m:
            return "input"
        if i < 2 * self.n + self.m + self.p:
            return "output"
        return "algebraic"

    def unknown_indices(self) -> np.ndarray:
        """Indices of z, y and alpha: the unknowns of one implicit time step."""
        return np.r_[np.arange(self.n, 2 * self.n), np.arange(2 * self.n + self.m, self.n_v)]


@dataclass(frozen=True, eq=False)
class SignalVector:
    values: np.ndarray
    partition: SignalPartition

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.partition.n_v:
            raise DimensionError(
                f"signal vector has {values.shape[0]} entries, partition expects {self.partition.n_v}"
            )
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_mapping(
        cls,
        partition: SignalPartition,
        values: Mapping[str, float],
        default: float = 0.0,
    ) -> "SignalVector":
        data = np.full(partition.n_v, default, dtype=float)
        for name, value in values.items():
            data[partition.index(name)] = value
        return cls(data, partition)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.partition.index(name)])

    def replace(self, values: Mapping[str, float]) -> "SignalVector":
        data = self.values.copy()
        for name, value in values.items():
            data[self.partition.index(name)] = value
        return SignalVector(data, self.partition)

    def as_dict(self) -> Dict[str, float]:
        return {name: float(x) for name, x in zip(self.partition.names, self.values)}


@dataclass(frozen=True, eq=False)
class Cpn1Model:
    """
    Factorized iMTI model 0 = phi @ s(v) with s_r(v) = prod_i (1 - |S_ir| + S_ir v_i).

    Args:
        partition: signal layout shared by phi and s_struct
        phi: N_phi x R coefficient matrix
        s_struct: N_v x R structure matrix
        lifts: (cos, sin) state pairs constrained to the unit circle
        equations: one label per row of phi, used in diagnostics
    """

    partition: SignalPartition
    phi: np.ndarray
    s_struct: np.ndarray
    lifts: Tuple[Tuple[str, str], ...] = ()
    equations: Tuple[str, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.s_struct, dtype=float)
        if s.ndim != 2 or s.shape[0] != self.partition.n_v:
            raise DimensionError(
                f"structure matrix has shape {s.shape}, partition has {self.partition.n_v} signals"
            )
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim == 1:
            phi = phi.reshape(1, -1)
        if phi.shape[1] != s.shape[1]:
            raise DimensionError(
                f"phi has {phi.shape[1]} factors, structure matrix has {s.shape[1]}"
            )
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(s))):
            raise ModelFormatError("model matrices contain NaN or Inf")
        if phi.shape[0] < self.partition.n + self.partition.p:
            raise DimensionError(
                f"{phi.shape[0]} equations cannot cover n + p = "
                f"{self.partition.n + self.partition.p}"
            )
        equations = tuple(self.equations) or tuple(f"eq{i}" for i in range(phi.shape[0]))
        if len(equations) != phi.shape[0]:
            raise DimensionError(
                f"{len(equations)} equation labels for {phi.shape[0]} equations"
            )
        for pair in self.lifts:
            for name in pair:
                if self.partition.role(name) != "state":
                    raise ModelFormatError(f"lift signal '{name}' is not a state")
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "s_struct", _frozen(s))
        object.__setattr__(self, "lifts", tuple(tuple(pair) for pair in self.lifts))
        object.__setattr__(self, "equations", equations)

    @property
    def r(self) -> int:
        return self.s_struct.shape[1]

    @property
    def n_eq(self) -> int:
        return self.phi.shape[0]

    @property
    def big_q(self) -> int:
        """Number of algebraic equations Q = N_phi - n - p."""
        return self.n_eq - self.partition.n - self.partition.p

    @property
    def is_square(self) -> bool:
        """As many equations as unknowns (z, y, alpha) of one time step."""
        part = self.partition
        return self.n_eq == part.n + part.p + part.q

    def with_phi(self, phi: np.ndarray) -> "Cpn1Model":
        return Cpn1Model(self.partition, phi, self.s_struct, self.lifts, self.equations)

    def vector(self, values: Optional[Mapping[str, float]] = None) -> SignalVector:
        return SignalVector.from_mapping(self.partition, values or {})

    def equals(self, other: "Cpn1Model") -> bool:
        return (
            self.partition == other.partition
            and self.lifts == other.lifts
            and self.equations == other.equations
            and np.array_equal(self.phi, other.phi)
            and np.array_equal(self.s_struct, other.s_struct)
        )


@dataclass(frozen=True, eq=False)
class FullTensorModel:
    """Dense parameter tensor of shape (2,)*N_v + (N_phi,)."""

    entries: np.ndarray
    partition: SignalPartition

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        n_v = self.partition.n_v
        if entries.ndim != n_v + 1 or any(d != 2 for d in entries.shape[:-1]):
            raise DimensionError(
                f"full tensor must have shape (2,)*{n_v} + (N_phi,), got {entries.shape}"
            )
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def n_eq(self) -> int:
        return self.entries.shape[-1]


