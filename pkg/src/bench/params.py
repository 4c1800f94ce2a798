"""
Parameter set of the 3-bus benchmark: a GFM and a GFL converter feeding a
resistive load next to a Thevenin grid equivalent.
"""
import math
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.blocks.params import (
    CurrentControlParams,
    DroopParams,
    LoadParams,
    PqControlParams,
    RlBranchParams,
    SrfPllParams,
    VirtualAdmittanceParams,
    VsmParams,
)


class NetworkParams(BaseModel):
    """
    Grid data, converter tuning and the operating references.

    r_load defaults to the resistance that absorbs load_pu (the nominal
    p_ref_gfm + p_ref_gfl) at nominal voltage.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    v_ll: float = Field(230e3, gt=0)
    frequency: float = Field(50.0, gt=0)
    s_b: float = Field(100e6, gt=0)
    scr: float = Field(5.0, gt=0)
    x_over_r: float = Field(10.0, gt=0)
    r_f_pu: float = Field(0.02, gt=0)
    l_f_pu: float = Field(0.07, gt=0)
    source_scale: float = Field(1.0, gt=0)
    r_load: Optional[float] = Field(None, gt=0)
    load_pu: float = Field(0.8, gt=0)

    # the printed k_d sign destabilizes the swing mode
    vsm: VsmParams = VsmParams(omega_frame=1.0, damping="damping")
    droop: DroopParams = DroopParams()
    va: VirtualAdmittanceParams = VirtualAdmittanceParams()
    cc_gfm: CurrentControlParams = CurrentControlParams()
    pll: SrfPllParams = SrfPllParams()
    pq: PqControlParams = PqControlParams()
    cc_gfl: CurrentControlParams = CurrentControlParams()

    p_ref_gfm: float = 0.4
    q_ref_gfm: float = 0.0
    omega_ref: float = 1.0
    v_ref: float = 1.0
    p_ref_gfl: float = 0.4
    q_ref_gfl: float = 0.0

    @property
    def omega_b(self) -> float:
        return 2.0 * math.pi * self.frequency

    @property
    def v_peak(self) -> float:
        return self.v_ll * math.sqrt(2.0 / 3.0)

    @property
    def z_b(self) -> float:
        return self.v_ll ** 2 / self.s_b

    @property
    def load_resistance(self) -> float:
        if self.r_load is not None:
            return self.r_load
        return 1.5 * self.v_peak ** 2 / (self.load_pu * self.s_b)

    def grid_branch(self) -> RlBranchParams:
        return RlBranchParams.thevenin(self.v_ll, self.s_b, self.scr, self.x_over_r, self.frequency)

    def filter_branch(self) -> RlBranchParams:
        return RlBranchParams(
            r=self.r_f_pu * self.z_b,
            l=self.l_f_pu * self.z_b / self.omega_b,
            omega_g=self.omega_b,
        )

    def load(self) -> LoadParams:
        return LoadParams(r_load=self.load_resistance)

    def references(self) -> Dict[str, float]:
        return {
            "p_ref_gfm": self.p_ref_gfm,
            "q_ref_gfm": self.q_ref_gfm,
            "omega_ref": self.omega_ref,
            "v_ref": self.v_ref,
            "p_ref_gfl": self.p_ref_gfl,
            "q_ref_gfl": self.q_ref_gfl,
        }
