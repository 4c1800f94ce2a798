"""
Converter control blocks: VSM, reactive power droop, virtual admittance,
current control, pq control and power measurement.

Each block takes the names of the signals it reads and defines, so the same
constructor serves both converters of a network.
"""
from typing import Optional, Sequence, Tuple

from src.blocks.builder import FragmentBuilder, const, j2, sig, vec
from src.blocks.lifts import TrigLift, add_trig_lift
from src.blocks.params import (
    CurrentControlParams,
    DroopParams,
    PqControlParams,
    VirtualAdmittanceParams,
    VsmParams,
)
from src.core.types import Cpn1Model

Pair = Tuple[str, str]


def vsm_lift(tag: str = "vsm") -> TrigLift:
    return TrigLift(f"theta_{tag}", f"zc_{tag}", f"zs_{tag}", f"omega_{tag}")


def vsm_block(
    params: Optional[VsmParams] = None,
    tag: str = "vsm",
    p: str = "p_gfm",
    p_ref: str = "p_ref_gfm",
    omega_ref: str = "omega_ref",
) -> Cpn1Model:
    """
    Swing equation with lifted angle.

    2h domega = p_ref - p / s_b + k_d (omega - omega_ref)   (damping "printed")
    2h domega = p_ref - p / s_b - k_d (omega - omega_ref)   (damping "damping")
    dtheta    = omega_b (omega - omega_frame)
    and the (cos, sin) lift of theta. p is in watts, references per unit.
    """
    params = params or VsmParams()
    lift = vsm_lift(tag)
    builder = FragmentBuilder(tag)
    omega_name = lift.rate_expr
    builder.states(omega_name, lift.angle_name)
    omega = sig(omega_name)
    sign = 1.0 if params.damping == "damping" else -1.0
    builder.equation(
        "swing",
        2.0 * params.h * builder.d(omega_name)
        - sig(p_ref)
        + sig(p) / params.s_b
        + sign * params.k_d * (omega - sig(omega_ref)),
    )
    rate = params.omega_b * (omega - const(params.omega_frame))
    builder.equation("angle", builder.d(lift.angle_name) - rate)
    add_trig_lift(builder, lift, rate)
    return builder.build()


def droop_q_block(
    params: Optional[DroopParams] = None,
    q: str = "q_gfm",
    q_ref: str = "q_ref_gfm",
    v_ref: str = "v_ref",
    state: str = "xq_filt",
    out: str = "vd_star",
) -> Cpn1Model:
    """Low-pass filtered q-v droop; v_ref and q_ref are per unit."""
    params = params or DroopParams()
    builder = FragmentBuilder("droop")
    (x,) = builder.states(state)
    (vd_star,) = builder.algebraics(out)
    builder.equation("filter", builder.d(state) + params.omega_f * x - params.omega_f * sig(q))
    builder.equation(
        "droop",
        -vd_star
        + params.v_peak * sig(v_ref)
        - params.k_q * x
        + params.k_q * params.s_b * sig(q_ref),
    )
    return builder.build()


def virtual_admittance_block(
    params: Optional[VirtualAdmittanceParams] = None,
    reference: Sequence[Optional[str]] = ("vd_star", None),
    measured: Optional[Pair] = ("v_gfm_d", "v_gfm_q"),
    states: Pair = ("xva_d", "xva_q"),
    out: Pair = ("iref_gfm_d", "iref_gfm_q"),
) -> Cpn1Model:
    """
    Virtual RL admittance driven by reference minus measured voltage.

    dx = (-r_v / l_v) x + c omega_b J2 x + (v_ref - v), i* = x / l_v
    where c = -1 for the inductive coupling and +1 for the printed one.
    A reference component given as None is zero.
    """
    params = params or VirtualAdmittanceParams()
    builder = FragmentBuilder("virtual_admittance")
    x = builder.states(*states)
    i_ref = builder.algebraics(*out)
    drive = [sig(name) if name else const(0.0) for name in reference]
    if measured is not None:
        drive = [d - sig(m) for d, m in zip(drive, measured)]
    c = 1.0 if params.coupling == "printed" else -1.0
    cross = j2(x)
    ratio = params.r_v / params.l_v
    for k in range(2):
        builder.equation(
            f"flux_{k}",
            builder.d(states[k]) + ratio * x[k] - c * params.omega_b * cross[k] - drive[k],
        )
    for k in range(2):
        builder.equation(f"current_ref_{k}", i_ref[k] - x[k] / params.l_v)
    return builder.build()


def current_control_block(
    params: Optional[CurrentControlParams] = None,
    tag: str = "gfm",
    omega: Optional[str] = "omega_vsm",
    omega_scale: Optional[float] = None,
    omega_offset: float = 0.0,
) -> Cpn1Model:
    """
    PI current loop with filter decoupling.

    dx = i* - i             (integrator "single")
    dx = k_i (i* - i)       (integrator "printed")
    e  = k_p (i* - i) + k_i x + l_f w J2 i + v
    with the frame speed w = omega_offset + omega_scale * omega in rad/s;
    omega_scale defaults to omega_b so omega is per unit.
    """
    params = params or CurrentControlParams()
    scale = params.omega_b if omega_scale is None else omega_scale
    builder = FragmentBuilder(f"current_control_{tag}")
    states = (f"xi_{tag}_d", f"xi_{tag}_q")
    x = builder.states(*states)
    e = builder.algebraics(f"e_{tag}_d", f"e_{tag}_q")
    i_ref = vec(f"iref_{tag}_d", f"iref_{tag}_q")
    i = vec(f"i_{tag}_d", f"i_{tag}_q")
    v = vec(f"v_{tag}_d", f"v_{tag}_q")
    w = const(omega_offset)
    if omega is not None:
        w = w + scale * sig(omega)
    cross = j2(i)
    gain = params.k_i if params.integrator == "printed" else 1.0
    for k, axis in enumerate("dq"):
        error = i_ref[k] - i[k]
        builder.equation(f"integrator_{axis}", builder.d(states[k]) - gain * error)
        builder.equation(
            f"voltage_{axis}",
            -e[k] + params.k_p * error + params.k_i * x[k] + params.l_f * w * cross[k] + v[k],
        )
    return builder.build()


def pq_control_block(
    params: Optional[PqControlParams] = None,
    tag: str = "gfl",
    states: Pair = ("xi_p", "xi_q"),
) -> Cpn1Model:
    """
    Two PI loops on the power errors (references per unit, measurements in W, var).

    i_d* =  k_p (s_b p_ref - p) + x_p,   dx_p = k_i (s_b p_ref - p)
    i_q* = -k_p (s_b q_ref - q) - x_q,   dx_q = k_i (s_b q_ref - q)
    """
    params = params or PqControlParams()
    builder = FragmentBuilder(f"pq_{tag}")
    x_p, x_q = builder.states(*states)
    i_ref = builder.algebraics(f"iref_{tag}_d", f"iref_{tag}_q")
    err_p = params.s_b * sig(f"p_ref_{tag}") - sig(f"p_{tag}")
    err_q = params.s_b * sig(f"q_ref_{tag}") - sig(f"q_{tag}")
    builder.equation("integrator_p", builder.d(states[0]) - params.k_i * err_p)
    builder.equation("current_ref_d", -i_ref[0] + params.k_p * err_p + x_p)
    builder.equation("integrator_q", builder.d(states[1]) - params.k_i * err_q)
    builder.equation("current_ref_q", -i_ref[1] - params.k_p * err_q - x_q)
    return builder.build()


def power_block(tag: str = "gfm", scale: float = 1.5) -> Cpn1Model:
    """p = 1.5 (v_d i_d + v_q i_q), q = 1.5 (v_q i_d - v_d i_q) from local dq signals."""
    builder = FragmentBuilder(f"power_{tag}")
    p, q = builder.outputs(f"p_{tag}", f"q_{tag}")
    v_d, v_q = vec(f"v_{tag}_d", f"v_{tag}_q")
    i_d, i_q = vec(f"i_{tag}_d", f"i_{tag}_q")
    builder.equation("active", p - scale * (v_d * i_d + v_q * i_q))
    builder.equation("reactive", q - scale * (v_q * i_d - v_d * i_q))
    return builder.build()
