"""
Reduction of a descriptor system to a proper state-space model by eliminating
the algebraic part.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from src.core.errors import AlgebraicBlockError
from src.linearize.ldss import DescriptorSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProperSystem:
    """
    dxi = A xi + B u + c, with the original unknowns recovered as
    x = T xi + W u + w.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    t: np.ndarray
    w: np.ndarray
    w0: np.ndarray
    rank: int
    eliminated: int

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvals(self.a) if self.rank else np.zeros(0, dtype=complex)


def to_proper(sys: DescriptorSystem, rank_tol: float = 1e-10) -> ProperSystem:
    """
    Block elimination in the singular-value coordinates of E.

    With U^T E V = diag(S_r, 0) and x = V xi, the last dim - r rows are algebraic
    and are solved for the trailing coordinates.

    Raises:
        AlgebraicBlockError: the algebraic block of A is singular
    """
    e, a, b, c = sys.e, sys.a, sys.b, sys.c
    dim = sys.dim
    u_mat, sigma, vt = linalg.svd(e)
    scale = sigma[0] if sigma.size and sigma[0] > 0 else 1.0
    rank = int(np.sum(sigma > rank_tol * scale))

    if rank == dim:
        a_red = linalg.solve(e, a)
        return ProperSystem(
            a=a_red,
            b=linalg.solve(e, b),
            c=linalg.solve(e, c),
            t=np.eye(dim),
            w=np.zeros((dim, b.shape[1])),
            w0=np.zeros(dim),
            rank=rank,
            eliminated=0,
        )

    v = vt.T
    a_t = u_mat.T @ a @ v
    b_t = u_mat.T @ b
    c_t = u_mat.T @ c
    r = rank
    a11, a12, a21, a22 = a_t[:r, :r], a_t[:r, r:], a_t[r:, :r], a_t[r:, r:]
    size = dim - r
    block_rank = int(np.linalg.matrix_rank(a22))
    if block_rank < size:
        raise AlgebraicBlockError(size - block_rank, size)

    lu = linalg.lu_factor(a22)
    k_x = -linalg.lu_solve(lu, a21)
    k_u = -linalg.lu_solve(lu, b_t[r:])
    k_c = -linalg.lu_solve(lu, c_t[r:])
    inv_s = 1.0 / sigma[:r]
    a_red = inv_s[:, None] * (a11 + a12 @ k_x)
    b_red = inv_s[:, None] * (b_t[:r] + a12 @ k_u)
    c_red = inv_s * (c_t[:r] + a12 @ k_c)

    t = v[:, :r] + v[:, r:] @ k_x
    w = v[:, r:] @ k_u
    w0 = v[:, r:] @ k_c
    logger.debug("reduced descriptor system from %d to %d states", dim, r)
    return ProperSystem(a_red, b_red, c_red, t, w, w0, rank=r, eliminated=size)
