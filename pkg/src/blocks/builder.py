"""
Symbolic multilinear expressions and the fragment builder that turns equations
into a CPN1 model.

A Poly maps monomials (sorted tuples of distinct signal names) to coefficients.
Products that would repeat a signal are rejected, so everything a block emits is
multilinear by construction.
"""
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import ModelFormatError
from src.core.types import Cpn1Model, SignalPartition, derivative_name

Monomial = Tuple[str, ...]
Number = Union[int, float]


class NonMultilinearError(ModelFormatError):
    def __init__(self, left: Monomial, right: Monomial):
        product = "*".join(left + right) or "1"
        super().__init__(f"product {product} is not multilinear")
        self.product = product


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, float]] = None):
        self.terms: Dict[Monomial, float] = dict(terms or {})

    @staticmethod
    def _lift(other) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly({(): float(other)})

    def __add__(self, other) -> "Poly":
        other = self._lift(other)
        terms = dict(self.terms)
        for mono, coef in other.terms.items():
            terms[mono] = terms.get(mono, 0.0) + coef
        return Poly(terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({mono: -coef for mono, coef in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Poly":
        return self._lift(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly({mono: coef * float(other) for mono, coef in self.terms.items()})
        terms: Dict[Monomial, float] = {}
        for left, a in self.terms.items():
            for right, b in other.terms.items():
                if set(left) & set(right):
                    raise NonMultilinearError(left, right)
                mono = tuple(sorted(left + right))
                terms[mono] = terms.get(mono, 0.0) + a * b
        return Poly(terms)

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "Poly":
        return self * (1.0 / float(other))

    def signals(self) -> List[str]:
        seen: List[str] = []
        for mono in self.terms:
            for name in mono:
                if name not in seen:
                    seen.append(name)
        return seen

    def substitute(self, name: str, replacement: str) -> "Poly":
        """Rename one signal everywhere it occurs."""
        terms: Dict[Monomial, float] = {}
        for mono, coef in self.terms.items():
            renamed = tuple(sorted(replacement if s == name else s for s in mono))
            terms[renamed] = terms.get(renamed, 0.0) + coef
        return Poly(terms)

    def evaluate(self, values: Mapping[str, float]) -> float:
        total = 0.0
        for mono, coef in self.terms.items():
            prod = coef
            for name in mono:
                prod *= values[name]
            total += prod
        return total


def sig(name: str) -> Poly:
    return Poly({(name,): 1.0})


def const(value: Number) -> Poly:
    return Poly({(): float(value)})


def vec(*names: str) -> Tuple[Poly, ...]:
    return tuple(sig(name) for name in names)


def j2(pair: Sequence[Poly]) -> Tuple[Poly, Poly]:
    """Cross-coupling matrix J2 = [[0, -1], [1, 0]] applied to a (d, q) pair."""
    return (-pair[1], pair[0])


class FragmentBuilder:
    """
    Collects equations 0 = expr and emits a Cpn1Model.

    Signals declared as states, outputs or algebraic variables are defined by the
    fragment; every other signal an equation reads becomes an input.
    """

    def __init__(self, name: str = "fragment"):
        self.name = name
        self._states: List[str] = []
        self._outputs: List[str] = []
        self._algebraics: List[str] = []
        self._inputs: List[str] = []
        self._equations: List[Tuple[str, Poly]] = []
        self._deferred: List[Tuple[str, Poly]] = []
        self._lifts: List[Tuple[str, str]] = []

    def _declare(self, bucket: List[str], names: Iterable[str]) -> Tuple[Poly, ...]:
        out = []
        for name in names:
            if name in self._defined():
                raise ModelFormatError(f"signal '{name}' declared twice in {self.name}")
            bucket.append(name)
            out.append(sig(name))
        return tuple(out)

    def _defined(self) -> List[str]:
        return self._states + self._outputs + self._algebraics

    def defines(self, name: str) -> bool:
        return name in self._defined()

    def states(self, *names: str) -> Tuple[Poly, ...]:
        return self._declare(self._states, names)

    def outputs(self, *names: str) -> Tuple[Poly, ...]:
        return self._declare(self._outputs, names)

    def algebraics(self, *names: str) -> Tuple[Poly, ...]:
        return self._declare(self._algebraics, names)

    def inputs(self, *names: str) -> Tuple[Poly, ...]:
        for name in names:
            if name not in self._inputs:
                self._inputs.append(name)
        return vec(*names)

    def d(self, state: str) -> Poly:
        if state not in self._states:
            raise ModelFormatError(f"'{state}' is not a state of {self.name}")
        return sig(derivative_name(state))

    def equation(self, label: str, expr: Poly, defer: bool = False) -> None:
        """Add 0 = expr; deferred equations are placed after all others."""
        (self._deferred if defer else self._equations).append((label, expr))

    def lift(self, cos_name: str, sin_name: str) -> None:
        self._lifts.append((cos_name, sin_name))

    def build(self) -> Cpn1Model:
        equations = self._equations + self._deferred
        defined = set(self._defined()) | {derivative_name(s) for s in self._states}
        inputs = list(self._inputs)
        for _, expr in equations:
            for name in expr.signals():
                if name not in defined and name not in inputs:
                    inputs.append(name)
        partition = SignalPartition.from_groups(
            states=self._states,
            inputs=inputs,
            outputs=self._outputs,
            algebraics=self._algebraics,
        )
        columns: Dict[Monomial, int] = {}
        for _, expr in equations:
            for mono, coef in expr.terms.items():
                if coef != 0.0 and mono not in columns:
                    columns[mono] = len(columns)
        phi = np.zeros((len(equations), len(columns)))
        s = np.zeros((partition.n_v, len(columns)))
        for row, (_, expr) in enumerate(equations):
            for mono, coef in expr.terms.items():
                if coef != 0.0:
                    phi[row, columns[mono]] += coef
        for mono, col in columns.items():
            for name in mono:
                s[partition.index(name), col] = 1.0
        labels = tuple(f"{self.name}.{label}" for label, _ in equations)
        return Cpn1Model(partition, phi, s, tuple(self._lifts), labels)
