"""
Exception hierarchy for the modeling library.
Every failure raised on purpose by the library derives from MlstabError.
"""
from typing import Optional, Sequence


class MlstabError(Exception):
    """Base class for all library errors."""


class DimensionError(MlstabError):
    """Array or signal counts do not match the model partition."""


class ModelFormatError(MlstabError):
    """A model, point or schedule document violates its format."""


class SizeGuardError(MlstabError):
    """The full-tensor oracle was asked for too many signals."""


class UnknownSignalError(MlstabError):
    def __init__(self, name: str, where: str = "model"):
        super().__init__(f"unknown signal '{name}' in {where}")
        self.name = name


class NotEquilibriumError(MlstabError):
    def __init__(self, residual_norm: float, tol: float):
        super().__init__(
            f"point is not an equilibrium: |h(v)|_inf = {residual_norm:.3e} > {tol:.1e}; "
            "run the equilibrium finder first"
        )
        self.residual_norm = residual_norm
        self.tol = tol


class SingularPencilError(MlstabError):
    """det(lambda E - A) vanishes identically."""


class AlgebraicBlockError(MlstabError):
    def __init__(self, rank_defect: int, size: int):
        super().__init__(
            f"algebraic block is not invertible: rank defect {rank_defect} of {size}"
        )
        self.rank_defect = rank_defect


class ConvergenceError(MlstabError):
    def __init__(
        self,
        message: str,
        residual_norm: float,
        deficient_equations: Optional[Sequence[str]] = None,
    ):
        if deficient_equations:
            message = f"{message}; deficient equations: {', '.join(deficient_equations)}"
        super().__init__(message)
        self.residual_norm = residual_norm
        self.deficient_equations = list(deficient_equations or [])


class StepSizeError(MlstabError):
    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class AssemblyError(MlstabError):
    """A benchmark assembly does not have the expected dimensions."""
