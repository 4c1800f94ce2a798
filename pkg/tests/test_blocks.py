"""
Component library tests: builder, lifts, PLL and converter blocks.
Run with: python -m tests.test_blocks
"""
import math
import sys
from pathlib import Path

project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

import numpy as np
from pydantic import ValidationError

from src.blocks import (
    CurrentControlParams,
    FragmentBuilder,
    NonMultilinearError,
    RlBranchParams,
    VsmParams,
    current_control_block,
    lift_polynomial,
    pll_block,
    rl_branch_block,
    rotation_block,
    sig,
    srf_pll_block,
    vsm_block,
)
from src.blocks.converters import vsm_lift
from src.blocks.network import GRID_LIFT
from src.blocks.params import L_FILTER
from src.core.cpn1 import eval_residual, residual_norm
from src.core.errors import ModelFormatError

PLL_INPUTS = (325.2059, 22.7406)


def test_builder_rejects_repeated_signal():
    print("Testing multilinearity guard...")
    try:
        sig("x") * (sig("x") + 1.0)
        assert False, "expected NonMultilinearError"
    except NonMultilinearError as e:
        assert e.product == "x*x", e.product
    print("✅ Multilinearity guard test passed")


def test_builder_infers_inputs():
    print("Testing fragment builder...")
    b = FragmentBuilder("lag")
    (x,) = b.states("x")
    b.equation("rate", b.d("x") + 2.0 * x - 2.0 * sig("u") * sig("k"))
    model = b.build()
    assert model.partition.states == ("x",)
    assert model.partition.inputs == ("k", "u")
    assert model.r == 3 and model.equations == ("lag.rate",)
    v = model.vector({"x": 1.0, "u": 2.0, "k": 0.5, "d_x": 0.0})
    assert abs(eval_residual(model, v)[0]) < 1e-14
    print("✅ Fragment builder test passed")


def test_polynomial_lift():
    print("Testing polynomial lifting...")
    model = lift_polynomial("x", {"x": 2, "y": 1}, coefficient=3.0)
    assert model.partition.algebraics == ("alpha_x_1",)
    assert model.n_eq == 2 and model.r == 4
    v = model.vector({"x": 2.0, "alpha_x_1": 2.0, "y": 0.5, "d_x": 6.0})
    assert residual_norm(model, v) < 1e-14
    try:
        lift_polynomial("x", {"x": -1})
        assert False, "expected ModelFormatError"
    except ModelFormatError:
        pass
    print("✅ Polynomial lifting test passed")


def test_pll_block_structure():
    """Three states, two copies, two inputs and five equations."""
    print("Testing lifted PLL structure...")
    model = pll_block()
    part = model.partition
    assert (part.n, part.m, part.p, part.q) == (3, 2, 0, 2)
    assert part.states == ("z1", "z2", "z3")
    assert part.algebraics == ("alpha1", "alpha2")
    assert model.n_eq == 5 and model.is_square
    assert model.r == 15, model.r
    assert model.lifts == (("z1", "z2"),)
    print("✅ PLL structure test passed")


def test_pll_printed_equilibrium():
    """The rounded equilibrium leaves only a small residual."""
    print("Testing PLL equilibrium residual...")
    model = pll_block()
    v = model.vector({
        "z1": 0.9976, "z2": -0.0698, "z3": 0.0,
        "alpha1": 0.9976, "alpha2": -0.0698,
        "v_D": PLL_INPUTS[0], "v_Q": PLL_INPUTS[1],
    })
    assert np.max(np.abs(eval_residual(model, v))) < 0.15
    angle = math.atan2(-PLL_INPUTS[1], PLL_INPUTS[0])
    exact = v.replace({"z1": math.cos(angle), "z2": math.sin(angle),
                       "alpha1": math.cos(angle), "alpha2": math.sin(angle)})
    assert np.max(np.abs(eval_residual(model, exact))) < 1e-10
    print("✅ PLL equilibrium residual test passed")


def test_srf_pll_counts():
    print("Testing SRF-PLL structure...")
    model = srf_pll_block()
    assert model.partition.states == ("zc_pll", "zs_pll", "xi_pll", "theta_pll", "xf_pll")
    assert model.partition.algebraics == ("dw_pll",)
    assert model.r == 11, model.r
    print("✅ SRF-PLL structure test passed")


def test_vsm_counts():
    print("Testing VSM structure...")
    assert vsm_block().r == 10
    framed = vsm_block(VsmParams(omega_frame=1.0))
    assert framed.r == 13
    assert framed.partition.states == ("omega_vsm", "theta_vsm", "zc_vsm", "zs_vsm")
    print("✅ VSM structure test passed")


def test_rotation_block():
    """h1, h2 are cos and sin of the angle difference; the pair is rotated by it."""
    print("Testing rotation block...")
    model = rotation_block(vsm_lift(), GRID_LIFT, ("h1", "h2"), ("v_D", "v_Q"), ("v_d", "v_q"))
    a, g = 0.7, -0.2
    big_d, big_q = 3.0, -1.5
    h1, h2 = math.cos(a - g), math.sin(a - g)
    v = model.vector({
        "zc_vsm": math.cos(a), "zs_vsm": math.sin(a),
        "zc_grid": math.cos(g), "zs_grid": math.sin(g),
        "h1": h1, "h2": h2, "v_D": big_d, "v_Q": big_q,
        "v_d": h1 * big_d + h2 * big_q, "v_q": -h2 * big_d + h1 * big_q,
    })
    assert residual_norm(model, v) < 1e-14
    print("✅ Rotation block test passed")


def test_rl_branch_steady_state():
    print("Testing RL branch phasor steady state...")
    params = RlBranchParams(r=2.0, l=0.01, omega_g=314.0)
    model = rl_branch_block(params, source=(100.0, 0.0))
    current = 100.0 / complex(params.r, params.omega_g * params.l)
    v = model.vector({"i_D": current.real, "i_Q": current.imag})
    assert residual_norm(model, v) < 1e-12
    print("✅ RL branch test passed")


def test_parameter_validation():
    print("Testing parameter validation...")
    for bad in ({"h": 0.0}, {"k_d": -1.0}, {"inertia": 2.0}):
        try:
            VsmParams(**bad)
            assert False, f"expected ValidationError for {bad}"
        except ValidationError:
            pass
    tuned = CurrentControlParams.from_filter(L_FILTER, 10.58)
    assert abs(tuned.k_p - 117.87) < 0.01
    print("✅ Parameter validation test passed")


def test_vsm_damping_sign():
    """The k_d term enters the power balance with a plus sign unless damping is selected."""
    print("Testing VSM damping sign...")
    assert VsmParams().damping == "printed"
    values = {"omega_vsm": 1.01, "omega_ref": 1.0, "p_ref_gfm": 0.0, "p_gfm": 0.0, "d_omega_vsm": 0.25}
    for damping, expected in (("printed", 0.0), ("damping", 1.0)):
        model = vsm_block(VsmParams(damping=damping))
        swing = model.equations.index("vsm.swing")
        residual = eval_residual(model, model.vector(values))[swing]
        assert abs(residual - expected) < 1e-12, (damping, residual)
    print("✅ VSM damping sign test passed")


def test_current_control_integrates_once():
    """k_i scales the integrator output only, unless the printed variant is selected."""
    print("Testing current control integrator...")
    assert CurrentControlParams().integrator == "single"
    values = {"iref_gfm_d": 2.0, "i_gfm_d": 1.5, "d_xi_gfm_d": 0.5}
    for integrator, gain in (("single", 1.0), ("printed", 1058.0)):
        model = current_control_block(CurrentControlParams(integrator=integrator))
        row = model.equations.index("current_control_gfm.integrator_d")
        v = model.vector({**values, "d_xi_gfm_d": 0.5 * gain})
        assert abs(eval_residual(model, v)[row]) < 1e-9
    # e_d = k_p err + k_i x + v at zero cross coupling
    model = current_control_block(CurrentControlParams(), omega=None)
    row = model.equations.index("current_control_gfm.voltage_d")
    v = model.vector({**values, "xi_gfm_d": 0.01, "v_gfm_d": 100.0, "e_gfm_d": 117.87 * 0.5 + 10.58 + 100.0})
    assert abs(eval_residual(model, v)[row]) < 1e-9
    print("✅ Current control integrator test passed")


if __name__ == "__main__":
    print("Running block library tests...\n")
    try:
        test_builder_rejects_repeated_signal()
        test_builder_infers_inputs()
        test_polynomial_lift()
        test_pll_block_structure()
        test_pll_printed_equilibrium()
        test_srf_pll_counts()
        test_vsm_counts()
        test_rotation_block()
        test_rl_branch_steady_state()
        test_parameter_validation()
        test_vsm_damping_sign()
        test_current_control_integrates_once()
        print("\n✅ All tests passed!")
    except AssertionError as e:
        print(f"\n❌ Test failed: {e}")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
