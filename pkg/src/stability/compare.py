"""
Pairing of two eigenvalue sets.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np


@dataclass
class EigPair:
    a: complex
    b: complex
    abs_dist: float
    rel_dist: float


@dataclass
class EigMatch:
    pairs: List[EigPair] = field(default_factory=list)
    unmatched_a: List[complex] = field(default_factory=list)
    unmatched_b: List[complex] = field(default_factory=list)
    tol: float = 1e-3

    @property
    def max_rel(self) -> float:
        return max((p.rel_dist for p in self.pairs), default=0.0)

    @property
    def max_abs(self) -> float:
        return max((p.abs_dist for p in self.pairs), default=0.0)

    @property
    def within_tol(self) -> bool:
        return all(p.rel_dist <= self.tol or p.abs_dist <= self.tol for p in self.pairs)

    def as_dict(self) -> dict:
        return {
            "tol": self.tol,
            "max_abs": self.max_abs,
            "max_rel": self.max_rel,
            "within_tol": self.within_tol,
            "pairs": [
                {
                    "a": [p.a.real, p.a.imag],
                    "b": [p.b.real, p.b.imag],
                    "abs": p.abs_dist,
                    "rel": p.rel_dist,
                }
                for p in self.pairs
            ],
            "unmatched_a": [[z.real, z.imag] for z in self.unmatched_a],
            "unmatched_b": [[z.real, z.imag] for z in self.unmatched_b],
        }


def eig_compare(a: Sequence[complex], b: Sequence[complex], tol: float = 1e-3) -> EigMatch:
    """
    Greedy nearest-neighbour pairing: repeatedly match the closest remaining
    pair. Leftovers of the longer list are reported unmatched.
    """
    xa = np.asarray(a, dtype=complex).reshape(-1)
    xb = np.asarray(b, dtype=complex).reshape(-1)
    match = EigMatch(tol=tol)
    if xa.size == 0 or xb.size == 0:
        match.unmatched_a = [complex(z) for z in xa]
        match.unmatched_b = [complex(z) for z in xb]
        return match

    dist = np.abs(xa[:, None] - xb[None, :])
    used_a = np.zeros(xa.size, dtype=bool)
    used_b = np.zeros(xb.size, dtype=bool)
    chosen: List[Tuple[int, int]] = []
    for _ in range(min(xa.size, xb.size)):
        masked = np.where(used_a[:, None] | used_b[None, :], np.inf, dist)
        i, j = np.unravel_index(np.argmin(masked), masked.shape)
        used_a[i] = used_b[j] = True
        chosen.append((int(i), int(j)))

    for i, j in sorted(chosen):
        d = float(dist[i, j])
        scale = max(abs(xa[i]), abs(xb[j]))
        rel = d / scale if scale > 0 else 0.0
        match.pairs.append(EigPair(complex(xa[i]), complex(xb[j]), d, rel))
    match.unmatched_a = [complex(z) for z in xa[~used_a]]
    match.unmatched_b = [complex(z) for z in xb[~used_b]]
    return match
