"""
Input schedules and parameter switches driving a simulation.

Inputs are left-continuous in time: an event at t_e affects every instant
strictly after t_e, so the sample at t_e still shows the pre-event value.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import DimensionError, ModelFormatError
from src.core.types import Cpn1Model, SignalPartition

logger = logging.getLogger(__name__)


class InputEvent(BaseModel):
    """Set an input to value at time t, then ramp it at rate per second."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    t: float
    signal: str
    value: float
    rate: float = 0.0


@dataclass(frozen=True, eq=False)
class ModelSwitch:
    """Replace the model by one with the same partition and structure after time t."""

    t: float
    model: Cpn1Model
    label: str = ""


class InputSchedule:
    def __init__(
        self,
        events: Iterable[InputEvent] = (),
        switches: Iterable[ModelSwitch] = (),
    ):
        self.events: List[InputEvent] = sorted(events, key=lambda e: e.t)
        self.switches: List[ModelSwitch] = sorted(switches, key=lambda s: s.t)

    @classmethod
    def from_json(cls, data: Sequence[dict]) -> "InputSchedule":
        if not isinstance(data, list):
            raise ModelFormatError("schedule must be a list of {t, signal, value} events")
        return cls([InputEvent.model_validate(item) for item in data])

    def to_json(self) -> List[dict]:
        return [event.model_dump() for event in self.events]

    def validate_for(self, model: Cpn1Model) -> None:
        part = model.partition
        for event in self.events:
            if event.signal not in part or part.role(event.signal) != "input":
                raise ModelFormatError(f"scheduled signal '{event.signal}' is not a model input")
        for switch in self.switches:
            other = switch.model
            if other.partition != part or not np.array_equal(other.s_struct, model.s_struct):
                raise DimensionError(
                    f"model switch at t={switch.t} changes the partition or structure"
                )

    def event_times(self, t0: float, t1: float) -> List[float]:
        times = {e.t for e in self.events} | {s.t for s in self.switches}
        return sorted(t for t in times if t0 <= t < t1)

    def inputs_at(self, t: float, partition: SignalPartition, base: np.ndarray) -> np.ndarray:
        """Input values at t given the initial input values base."""
        out = np.array(base, dtype=float)
        offset = 2 * partition.n
        for event in self.events:
            if event.t >= t:
                break
            idx = partition.index(event.signal) - offset
            out[idx] = event.value + event.rate * (t - event.t)
        return out

    def model_at(self, t: float, base: Cpn1Model) -> Cpn1Model:
        model = base
        for switch in self.switches:
            if switch.t >= t:
                break
            model = switch.model
        return model

    def has_ramps(self) -> bool:
        return any(event.rate != 0.0 for event in self.events)


def scaled_model(model: Cpn1Model, rows: Sequence[int], columns: Optional[Sequence[int]], factor: float) -> Cpn1Model:
    """Copy of a model with phi[rows, columns] multiplied by factor (all columns when None)."""
    phi = np.array(model.phi)
    if columns is None:
        phi[list(rows), :] *= factor
    else:
        phi[np.ix_(list(rows), list(columns))] *= factor
    return model.with_phi(phi)
