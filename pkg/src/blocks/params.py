"""
Parameter sets of the component library.

All network quantities are SI (V, A, W, var, ohm, H); controller references
(p_ref, q_ref, omega_ref, v_ref) are per unit.
"""
import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

NOMINAL_FREQUENCY = 50.0
OMEGA_BASE = 2.0 * math.pi * NOMINAL_FREQUENCY
S_BASE = 100e6
V_LINE_LINE = 230e3
V_PEAK = V_LINE_LINE * math.sqrt(2.0) / math.sqrt(3.0)
Z_BASE = V_LINE_LINE ** 2 / S_BASE
L_FILTER = 0.07 * Z_BASE / OMEGA_BASE
R_FILTER = 0.02 * Z_BASE


class BlockParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PllParams(BlockParams):
    """Gains of the lifted PLL (rad/V/s and rad/V/s^2)."""

    k_p: float = Field(0.5, ge=0)
    k_i: float = Field(9.0, ge=0)


class SrfPllParams(BlockParams):
    k_p: float = Field(1.065e-4, ge=0)
    k_i: float = Field(0.0011, ge=0)
    omega_f: float = Field(20.0, ge=0)


class VsmParams(BlockParams):
    """
    Virtual synchronous machine.

    damping selects the sign of the k_d term: "printed" adds
    k_d (omega - omega_ref) to the power balance, "damping" subtracts it.
    omega_frame is the per-unit speed of the frame the angle is measured in.
    """

    h: float = Field(1.0, gt=0)
    k_d: float = Field(50.0, ge=0)
    omega_b: float = Field(OMEGA_BASE, gt=0)
    s_b: float = Field(S_BASE, gt=0)
    omega_frame: float = Field(0.0, ge=0)
    damping: Literal["printed", "damping"] = "printed"


class DroopParams(BlockParams):
    omega_f: float = Field(20.0, ge=0)
    k_q: float = Field(3.7559e-4, ge=0)
    v_peak: float = Field(V_PEAK, gt=0)
    s_b: float = Field(S_BASE, gt=0)


class VirtualAdmittanceParams(BlockParams):
    """
    coupling "inductive" gives the cross term of a physical RL branch
    (-omega_b J2 x); "printed" flips it to +omega_b J2 x.
    """

    r_v: float = Field(0.30, gt=0)
    l_v: float = Field(0.03, gt=0)
    omega_b: float = Field(OMEGA_BASE, ge=0)
    coupling: Literal["inductive", "printed"] = "inductive"


class CurrentControlParams(BlockParams):
    """
    integrator "single" integrates the current error with unit gain so k_i
    enters the output once; "printed" also scales the state equation by k_i,
    which makes the effective integral gain k_i squared.
    """

    k_p: float = Field(117.87, ge=0)
    k_i: float = Field(1058.0, ge=0)
    l_f: float = Field(L_FILTER, gt=0)
    omega_b: float = Field(OMEGA_BASE, ge=0)
    integrator: Literal["single", "printed"] = "single"

    @classmethod
    def from_filter(cls, l_f: float, r_f: float, tau: float = 1e-3, **kwargs) -> "CurrentControlParams":
        """First-order closed-loop tuning k_p = l_f / tau, k_i = r_f / tau."""
        return cls(k_p=l_f / tau, k_i=r_f / tau, l_f=l_f, **kwargs)


class PqControlParams(BlockParams):
    k_p: float = Field(1e-4, ge=0)
    k_i: float = Field(1e-2, ge=0)
    s_b: float = Field(S_BASE, gt=0)


class RlBranchParams(BlockParams):
    r: float = Field(gt=0)
    l: float = Field(gt=0)
    omega_g: float = Field(OMEGA_BASE, ge=0)

    @classmethod
    def thevenin(
        cls,
        v_ll: float = V_LINE_LINE,
        s_b: float = S_BASE,
        scr: float = 5.0,
        x_over_r: float = 10.0,
        frequency: float = NOMINAL_FREQUENCY,
    ) -> "RlBranchParams":
        """Grid equivalent from short-circuit ratio and X/R."""
        omega = 2.0 * math.pi * frequency
        z_th = v_ll ** 2 / (scr * s_b)
        r = z_th / math.sqrt(1.0 + x_over_r ** 2)
        return cls(r=r, l=x_over_r * r / omega, omega_g=omega)

    @classmethod
    def converter_filter(cls, omega_g: float = OMEGA_BASE) -> "RlBranchParams":
        return cls(r=R_FILTER, l=L_FILTER, omega_g=omega_g)


class LoadParams(BlockParams):
    r_load: float = Field(gt=0)
