"""
Trajectory tables through pandas, in wide (one column per signal) or long
(time, signal, value) layout.
"""
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import pandas as pd

from src.simulation.dae import Trajectory

Layout = Literal["wide", "long"]


def trajectory_frame(
    traj: Trajectory,
    signals: Optional[Sequence[str]] = None,
    layout: Layout = "wide",
) -> pd.DataFrame:
    names = list(signals) if signals is not None else list(traj.partition.names)
    frame = pd.DataFrame({name: traj.signal(name) for name in names})
    frame.insert(0, "time", traj.times)
    if layout == "long":
        frame = frame.melt(id_vars="time", var_name="signal", value_name="value")
    return frame


def save_trajectory(
    path: Union[str, Path],
    traj: Trajectory,
    signals: Optional[Sequence[str]] = None,
    layout: Layout = "wide",
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectory_frame(traj, signals, layout).to_csv(path, index=False, float_format="%.12g")


def load_frame(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)
