"""
Phase-locked loops.
"""
from typing import Optional

from src.blocks.builder import FragmentBuilder, const, sig
from src.blocks.lifts import TrigLift, add_trig_lift
from src.blocks.params import PllParams, SrfPllParams
from src.core.types import Cpn1Model

PLL_LIFT = TrigLift("delta", "z1", "z2")


def pll_block(params: Optional[PllParams] = None, v_d: str = "v_D", v_q: str = "v_Q") -> Cpn1Model:
    """
    Lifted dq-frame PLL: states (z1, z2, z3) = (cos delta, sin delta, x_i),
    copies (alpha1, alpha2) and inputs (v_D, v_Q).

    0 = dz1 + (z3 - k_p e) alpha2
    0 = dz2 - (z3 - k_p e) alpha1
    0 = dz3 + k_i e
    0 = z1 - alpha1
    0 = z2 - alpha2
    with the phase error e = v_D z2 + v_Q z1.
    """
    params = params or PllParams()
    builder = FragmentBuilder("pll")
    builder.states("z1", "z2", "z3")
    builder.inputs(v_d, v_q)
    error = sig(v_d) * sig("z2") + sig(v_q) * sig("z1")
    add_trig_lift(builder, PLL_LIFT, sig("z3") - params.k_p * error, copies=("alpha1", "alpha2"))
    builder.equation("integrator", builder.d("z3") + params.k_i * error)
    return builder.build()


def srf_pll_block(
    params: Optional[SrfPllParams] = None,
    tag: str = "pll",
    v_q: str = "v_gfl_q",
    frame_rate: float = 0.0,
) -> Cpn1Model:
    """
    Synchronous-reference-frame PLL on the measured q-axis voltage.

    Produces the frequency deviation dw_<tag> (rad/s), the angle and its lift,
    the integrator and a low-pass filtered frequency estimate xf_<tag>.
    The angle advances at dw + frame_rate relative to the reference frame.
    """
    params = params or SrfPllParams()
    builder = FragmentBuilder(f"srf_{tag}")
    lift = TrigLift(f"theta_{tag}", f"zc_{tag}", f"zs_{tag}", f"dw_{tag}")
    builder.states(lift.cos_name, lift.sin_name, f"xi_{tag}", lift.angle_name)
    (dw,) = builder.algebraics(f"dw_{tag}")
    xi = sig(f"xi_{tag}")
    vq = sig(v_q)
    builder.equation("frequency", dw - params.k_p * vq - xi)
    builder.equation("integrator", builder.d(f"xi_{tag}") - params.k_i * vq)
    rate = dw + const(frame_rate)
    builder.equation("angle", builder.d(lift.angle_name) - rate)
    add_trig_lift(builder, lift, rate)
    builder.states(f"xf_{tag}")
    builder.equation(
        "filter",
        builder.d(f"xf_{tag}") - params.omega_f * dw + params.omega_f * sig(f"xf_{tag}"),
    )
    return builder.build()
