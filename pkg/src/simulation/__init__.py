from src.simulation.config import SolverConfig
from src.simulation.dae import Trajectory, consistent_init, drift_metric, simulate
from src.simulation.schedule import InputEvent, InputSchedule, ModelSwitch, scaled_model

__all__ = [
    "SolverConfig",
    "Trajectory",
    "consistent_init",
    "drift_metric",
    "simulate",
    "InputEvent",
    "InputSchedule",
    "ModelSwitch",
    "scaled_model",
]
