from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class SolverConfig(BaseModel):
    """
    Fixed-step implicit integration settings.

    Steps are halved on Newton failure down to max_step / max_halvings_factor and
    grow back to max_step after each accepted step.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    rel_tol: float = Field(1e-4, gt=0)
    abs_tol: float = Field(1e-6, gt=0)
    max_step: float = Field(1e-4, gt=0)
    newton_tol: float = Field(1e-10, gt=0)
    newton_max_iters: int = Field(20, ge=1)
    method: Literal["implicit-euler", "trapezoidal"] = "trapezoidal"
    project_lifts: bool = True
    min_step_ratio: float = Field(1.0 / 1024.0, gt=0, le=1)
    record_every: int = Field(1, ge=1)

    @property
    def min_step(self) -> float:
        return self.max_step * self.min_step_ratio
