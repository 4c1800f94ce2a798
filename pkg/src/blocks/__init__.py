from src.blocks.builder import FragmentBuilder, NonMultilinearError, Poly, const, sig
from src.blocks.converters import (
    current_control_block,
    droop_q_block,
    power_block,
    pq_control_block,
    virtual_admittance_block,
    vsm_block,
)
from src.blocks.lifts import (
    TrigLift,
    lift_polynomial,
    lift_trig,
    rotate_block,
    rotation_block,
)
from src.blocks.network import grid_frame_block, resistive_load_block, rl_branch_block
from src.blocks.params import (
    CurrentControlParams,
    DroopParams,
    LoadParams,
    PllParams,
    PqControlParams,
    RlBranchParams,
    SrfPllParams,
    VirtualAdmittanceParams,
    VsmParams,
)
from src.blocks.pll import pll_block, srf_pll_block

__all__ = [
    "FragmentBuilder",
    "NonMultilinearError",
    "Poly",
    "const",
    "sig",
    "TrigLift",
    "lift_polynomial",
    "lift_trig",
    "rotation_block",
    "rotate_block",
    "pll_block",
    "srf_pll_block",
    "vsm_block",
    "droop_q_block",
    "virtual_admittance_block",
    "current_control_block",
    "pq_control_block",
    "power_block",
    "rl_branch_block",
    "resistive_load_block",
    "grid_frame_block",
    "PllParams",
    "SrfPllParams",
    "VsmParams",
    "DroopParams",
    "VirtualAdmittanceParams",
    "CurrentControlParams",
    "PqControlParams",
    "RlBranchParams",
    "LoadParams",
]
