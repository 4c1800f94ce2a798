"""
Generalized eigenvalues of a descriptor pencil (E, A) and the small-signal verdict.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from src.core.errors import DimensionError, SingularPencilError
from src.linearize.ldss import DescriptorSystem
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

SINGULAR_PAIR_TOL = 1e-10

PencilLike = Union[DescriptorSystem, Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class GepSolution:
    """
    Pencil pairs (alpha, beta) with lambda = alpha / beta, plus eigenvectors.

    right_vectors and left_vectors hold one column per pair, in the order of
    alphas; finite_mask marks the pairs reported in finite.
    """

    finite: np.ndarray
    infinite_count: int
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    finite_mask: np.ndarray

    @property
    def dim(self) -> int:
        return self.alphas.size

    @property
    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues with infinite ones as complex inf."""
        out = np.full(self.dim, complex(np.inf, 0.0))
        out[self.finite_mask] = self.finite
        return out


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    margin: float
    zero_eigs: int
    dominant: List[complex]
    marginal: bool
    unstable_count: int

    @property
    def status(self) -> str:
        if not self.stable:
            return "unstable"
        return "marginal" if self.marginal else "stable"


def _pencil(sys: PencilLike) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(sys, DescriptorSystem):
        return sys.e, sys.a
    e, a = (np.atleast_2d(np.asarray(m, dtype=float)) for m in sys)
    if e.shape != a.shape or e.shape[0] != e.shape[1]:
        raise DimensionError(f"E {e.shape} and A {a.shape} must be square and equal")
    return e, a


def generalized_eig(sys: PencilLike, inf_tol: Optional[float] = None) -> GepSolution:
    """
    Solve A v = lambda E v and w^H A = lambda w^H E by QZ.

    Rows are equilibrated before the factorization; left vectors are mapped back
    to the original rows. A pair is infinite when |beta| <= inf_tol * max(|A|, |E|).

    Raises:
        SingularPencilError: some pair has both alpha and beta numerically zero
    """
    e, a = _pencil(sys)
    inf_tol = get_settings().inf_tol if inf_tol is None else inf_tol
    row_scale = np.maximum(np.abs(a).max(axis=1, initial=0.0), np.abs(e).max(axis=1, initial=0.0))
    row_scale[row_scale == 0.0] = 1.0
    d = 1.0 / row_scale
    a_s, e_s = a * d[:, None], e * d[:, None]

    w, vl, vr = linalg.eig(a_s, e_s, left=True, right=True, homogeneous_eigvals=True)
    alphas, betas = w[0], w[1]
    norm = max(linalg.norm(a_s, 2), linalg.norm(e_s, 2), np.finfo(float).tiny)
    singular = (np.abs(alphas) <= SINGULAR_PAIR_TOL * norm) & (np.abs(betas) <= SINGULAR_PAIR_TOL * norm)
    if np.any(singular):
        raise SingularPencilError(
            f"det(lambda E - A) vanishes identically ({int(singular.sum())} degenerate pairs)"
        )
    finite_mask = np.abs(betas) > inf_tol * norm
    finite = alphas[finite_mask] / betas[finite_mask]
    left = vl * d[:, None]
    logger.debug(
        "QZ on %d x %d pencil: %d finite, %d infinite",
        a.shape[0], a.shape[0], int(finite_mask.sum()), int((~finite_mask).sum()),
    )
    return GepSolution(
        finite=finite,
        infinite_count=int((~finite_mask).sum()),
        right_vectors=vr,
        left_vectors=left,
        alphas=alphas,
        betas=betas,
        finite_mask=finite_mask,
    )


def stability_verdict(sol: GepSolution, tol: Optional[float] = None) -> StabilityVerdict:
    """
    Unstable iff some finite eigenvalue has real part > tol. Eigenvalues with
    |lambda| <= tol are counted as zeros; a nonzero eigenvalue on the imaginary
    axis makes the verdict marginal.
    """
    tol = get_settings().stab_tol if tol is None else tol
    finite = np.asarray(sol.finite, dtype=complex)
    if finite.size == 0:
        return StabilityVerdict(True, float("-inf"), 0, [], False, 0)
    zero = np.abs(finite) <= tol
    nonzero = finite[~zero]
    margin = float(np.max(finite.real))
    unstable_count = int(np.sum(finite.real > tol))
    marginal = bool(np.any(np.abs(nonzero.real) <= tol))
    dominant: List[complex] = []
    if nonzero.size:
        top = np.max(nonzero.real)
        dominant = [complex(x) for x in nonzero if abs(x.real - top) <= tol]
    return StabilityVerdict(
        stable=unstable_count == 0,
        margin=margin,
        zero_eigs=int(zero.sum()),
        dominant=dominant,
        marginal=marginal,
        unstable_count=unstable_count,
    )
