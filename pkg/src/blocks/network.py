"""
Network elements in the global DQ frame: RL branches, the resistive load node
and the lifted frame angle.
"""
from typing import Optional, Sequence, Tuple

from src.blocks.builder import FragmentBuilder, const, j2, sig
from src.blocks.lifts import TrigLift, lift_trig
from src.blocks.params import LoadParams, RlBranchParams
from src.core.errors import ModelFormatError
from src.core.types import Cpn1Model

Pair = Tuple[str, str]

GRID_LIFT = TrigLift("theta_grid", "zc_grid", "zs_grid")


def rl_branch_block(
    params: RlBranchParams,
    states: Pair = ("i_D", "i_Q"),
    node_k: Optional[Pair] = None,
    node_l: Optional[Pair] = None,
    source: Tuple[float, float] = (0.0, 0.0),
    omega: Optional[str] = None,
    name: str = "branch",
) -> Cpn1Model:
    """
    Current of an RL section from node k to node l.

    di/dt = (-r/l - w J2) i + (v_k - v_l) / l

    node_k / node_l name the node voltages (None for ground); source adds a
    constant voltage at k. w is omega_g, or omega_g times the per-unit signal
    omega when one is given.
    """
    builder = FragmentBuilder(name)
    i = builder.states(*states)
    w = params.omega_g * sig(omega) if omega else const(params.omega_g)
    drive = [const(source[0]), const(source[1])]
    if node_k is not None:
        drive = [d + sig(v) for d, v in zip(drive, node_k)]
    if node_l is not None:
        drive = [d - sig(v) for d, v in zip(drive, node_l)]
    cross = j2(i)
    for k, axis in enumerate("DQ"):
        builder.equation(
            f"current_{axis}",
            builder.d(states[k]) + (params.r / params.l) * i[k] + w * cross[k] - drive[k] / params.l,
        )
    return builder.build()


def resistive_load_block(
    params: LoadParams,
    currents: Sequence[Pair],
    signs: Optional[Sequence[float]] = None,
    out: Pair = ("v_bus_D", "v_bus_Q"),
) -> Cpn1Model:
    """Node voltage v = r_load * (signed sum of the currents flowing into the node)."""
    signs = list(signs) if signs is not None else [1.0] * len(currents)
    if len(signs) != len(currents):
        raise ModelFormatError("one sign per node current")
    builder = FragmentBuilder("load")
    v = builder.algebraics(*out)
    for k, axis in enumerate("DQ"):
        total = const(0.0)
        for sign, pair in zip(signs, currents):
            total = total + sign * sig(pair[k])
        builder.equation(f"node_{axis}", -v[k] + params.r_load * total)
    return builder.build()


def grid_frame_block(rate: float = 0.0) -> Cpn1Model:
    """Lift of the global frame angle, advancing at rate (rad/s) relative to the DQ frame."""
    return lift_trig(GRID_LIFT, const(rate), name="grid_frame")

