"""
Time-domain simulation tests: accuracy, events, lift drift and failures.
Run with: python -m tests.test_dae
"""
import math
import sys
from pathlib import Path

project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

import numpy as np

from src.bench.nonlinear import pll_equilibrium, simulate_pll
from src.blocks import pll_block
from src.blocks.builder import FragmentBuilder
from src.core.errors import ConvergenceError, DimensionError, ModelFormatError, StepSizeError
from src.core.types import Cpn1Model, SignalPartition, derivative_name
from src.linearize import linear_model
from src.simulation import (
    InputEvent,
    InputSchedule,
    SolverConfig,
    consistent_init,
    drift_metric,
    simulate,
)

U = (325.2059, 22.7406)


def decay_error(max_step: float, method: str = "trapezoidal") -> float:
    model = linear_model([[-1.0]])
    v0 = model.vector({"x0": 1.0, "d_x0": -1.0})
    traj = simulate(model, v0, t_span=(0.0, 1.0), cfg=SolverConfig(max_step=max_step, method=method))
    return abs(traj.final["x0"] - math.exp(-1.0))


def test_linear_decay():
    print("Testing exponential decay...")
    assert decay_error(1e-3) < 1e-6
    print("✅ Exponential decay test passed")


def test_order_of_accuracy():
    """Halving the step divides the error by about 4 (trapezoidal) or 2 (implicit Euler)."""
    print("Testing order of accuracy...")
    ratio = decay_error(1e-2) / decay_error(5e-3)
    assert 3.2 <= ratio <= 4.8, ratio
    ratio_euler = decay_error(1e-2, "implicit-euler") / decay_error(5e-3, "implicit-euler")
    assert 1.6 <= ratio_euler <= 2.4, ratio_euler
    print("✅ Order of accuracy test passed")


def test_input_step_is_left_continuous():
    print("Testing input step events...")
    model = linear_model([[-1.0]], [[1.0]])
    v0 = model.vector({"x0": 0.0})
    schedule = InputSchedule([InputEvent(t=0.5, signal="u0", value=1.0)])
    traj = simulate(model, v0, schedule, (0.0, 2.0), SolverConfig(max_step=1e-3))
    assert 0.5 in traj.times
    assert traj.at(0.5)["u0"] == 0.0
    assert traj.final["u0"] == 1.0
    expected = 1.0 - math.exp(-1.5)
    assert abs(traj.final["x0"] - expected) < 1e-4
    print("✅ Input step test passed")


def test_ramped_input():
    print("Testing ramped inputs...")
    model = linear_model([[-10.0]], [[10.0]])
    schedule = InputSchedule([InputEvent(t=0.0, signal="u0", value=0.0, rate=1.0)])
    traj = simulate(model, model.vector({}), schedule, (0.0, 1.0), SolverConfig(max_step=1e-3))
    # x follows u(t) = t with a lag of 1/10
    assert abs(traj.final["x0"] - (1.0 - 0.1 * (1.0 - math.exp(-10.0)))) < 1e-4
    print("✅ Ramped input test passed")


def _pll_start(offset_deg: float):
    model = pll_block()
    x1 = pll_equilibrium(U)[0] + math.radians(offset_deg)
    c, s = math.cos(x1), math.sin(x1)
    guess = model.vector({"z1": c, "z2": s, "alpha1": c, "alpha2": s, "v_D": U[0], "v_Q": U[1]})
    frozen = list(model.partition.states) + list(model.partition.inputs)
    return model, consistent_init(model, guess, frozen=frozen), x1


def test_lift_matches_nonlinear_pll():
    """The lifted PLL reproduces (cos x1, sin x1, x2) of the unlifted model after a 4 degree step."""
    print("Testing lifted PLL against the nonlinear model...")
    model, v0, x1 = _pll_start(4.0)
    traj = simulate(model, v0, t_span=(0.0, 0.3), cfg=SolverConfig(max_step=1e-4))
    times, states = simulate_pll([x1, 0.0], U, (0.0, 0.3), t_eval=traj.times)
    assert np.max(np.abs(traj.signal("z1") - np.cos(states[:, 0]))) < 1e-4
    assert np.max(np.abs(traj.signal("z2") - np.sin(states[:, 0]))) < 1e-4
    assert np.max(np.abs(traj.signal("z3") - states[:, 1])) < 1e-3
    assert drift_metric(traj) < 1e-6
    # the angle settles back to the equilibrium
    assert abs(traj.final["z2"] - math.sin(pll_equilibrium(U)[0])) < 1e-3
    print("✅ Lifted PLL trajectory test passed")


def test_projection_limits_drift():
    print("Testing lift projection...")
    model, v0, _ = _pll_start(10.0)
    cfg = SolverConfig(max_step=1e-3, method="implicit-euler")
    free = simulate(model, v0, t_span=(0.0, 0.2), cfg=cfg.model_copy(update={"project_lifts": False}))
    projected = simulate(model, v0, t_span=(0.0, 0.2), cfg=cfg)
    assert drift_metric(projected) < 1e-10
    assert drift_metric(free) >= drift_metric(projected)
    print("✅ Projection test passed")


def test_deterministic():
    print("Testing determinism...")
    model, v0, _ = _pll_start(4.0)
    cfg = SolverConfig(max_step=1e-3)
    first = simulate(model, v0, t_span=(0.0, 0.05), cfg=cfg)
    second = simulate(model, v0, t_span=(0.0, 0.05), cfg=cfg)
    assert np.array_equal(first.samples, second.samples)
    print("✅ Determinism test passed")


def test_rejects_bad_setups():
    print("Testing setup validation...")
    model = linear_model([[-1.0]])
    try:
        simulate(model, model.vector({"x0": 1.0}), t_span=(0.0, 1.0))
        assert False, "expected ModelFormatError for inconsistent start"
    except ModelFormatError:
        pass
    part = SignalPartition.from_groups(states=["x"], algebraics=["y"])
    non_square = Cpn1Model(part, np.array([[1.0, 1.0, 0.0]]), np.eye(3))
    try:
        simulate(non_square, non_square.vector({}), t_span=(0.0, 1.0))
        assert False, "expected DimensionError"
    except DimensionError:
        pass
    print("✅ Setup validation test passed")


def test_step_size_underflow():
    """A singular iteration matrix exhausts the halvings and returns the partial run."""
    print("Testing step size underflow...")
    part = SignalPartition.from_groups(states=["x"], algebraics=["y"])
    phi = np.array([[-1.0, -1.0, 0.0], [0.0, 0.0, 0.0]])
    model = Cpn1Model(part, phi, np.eye(3))
    v0 = model.vector({"x": 1.0, derivative_name("x"): -1.0})
    try:
        simulate(model, v0, t_span=(0.0, 1.0), cfg=SolverConfig(max_step=1e-2, min_step_ratio=0.25))
        assert False, "expected StepSizeError"
    except StepSizeError as e:
        assert e.trajectory is not None and len(e.trajectory) == 1
    print("✅ Step size underflow test passed")


def test_consistent_init_failure():
    print("Testing consistent initialization failure...")
    part = SignalPartition.from_groups(inputs=["u"], algebraics=["y"])
    # 0 = 1 + 0 * y has no solution
    model = Cpn1Model(part, np.array([[1.0, 0.0]]), np.array([[0.0, 0.0], [0.0, 1.0]]))
    try:
        consistent_init(model, model.vector({}), frozen=["u"], max_iters=5)
        assert False, "expected ConvergenceError"
    except ConvergenceError as e:
        assert e.residual_norm > 0.1
    print("✅ Consistent initialization failure test passed")


def _rotor(omega: float):
    b = FragmentBuilder("rotor")
    c, s = b.states("zc", "zs")
    b.equation("cos", b.d("zc") + omega * s)
    b.equation("sin", b.d("zs") - omega * c)
    b.lift("zc", "zs")
    model = b.build()
    return model, model.vector({"zc": 1.0, "d_zs": omega})


def test_drift_grows_without_projection():
    """Implicit Euler shrinks the rotating lift every step unless it is projected back."""
    print("Testing unprojected lift drift...")
    model, v0 = _rotor(2.0 * math.pi * 50.0)
    cfg = SolverConfig(max_step=1e-4, method="implicit-euler", project_lifts=False)
    free = simulate(model, v0, t_span=(0.0, 0.1), cfg=cfg)
    drift = np.abs(free.drift)
    assert np.all(np.diff(drift) > 0.0)
    assert drift[-1] > 0.5
    projected = simulate(model, v0, t_span=(0.0, 0.1), cfg=cfg.model_copy(update={"project_lifts": True}))
    assert drift_metric(projected) < 1e-10
    print("✅ Unprojected drift test passed")


def test_pll_settles_after_angle_step():
    """After a 4 degree offset the angle error decays at the slow rate 20.6046 1/s."""
    print("Testing PLL settling...")
    model, v0, x1 = _pll_start(4.0)
    traj = simulate(model, v0, t_span=(0.0, 0.3), cfg=SolverConfig(max_step=1e-4))
    x_eq = pll_equilibrium(U)[0]
    error = np.arctan2(traj.signal("z2"), traj.signal("z1")) - x_eq
    assert abs(error[0] - math.radians(4.0)) < 1e-9
    late, later = np.interp([0.2, 0.3], traj.times, error)
    assert abs(later / late - math.exp(-20.6046 * 0.1)) < 1e-3 * math.exp(-20.6046 * 0.1)
    assert abs(later) < 0.01 * math.radians(4.0)
    print("✅ PLL settling test passed")


if __name__ == "__main__":
    print("Running simulation tests...\n")
    try:
        test_linear_decay()
        test_order_of_accuracy()
        test_input_step_is_left_continuous()
        test_ramped_input()
        test_lift_matches_nonlinear_pll()
        test_projection_limits_drift()
        test_drift_grows_without_projection()
        test_pll_settles_after_angle_step()
        test_deterministic()
        test_rejects_bad_setups()
        test_step_size_underflow()
        test_consistent_init_failure()
        print("\n✅ All tests passed!")
    except AssertionError as e:
        print(f"\n❌ Test failed: {e}")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
