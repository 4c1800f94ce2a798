"""
3-bus benchmark tests: assembly counts, equilibrium, spectrum and scenarios.
Run with: python -m tests.test_three_bus
"""
import sys
from functools import lru_cache
from pathlib import Path

project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

import numpy as np
from pydantic import ValidationError

from src.bench import (
    SCENARIOS,
    NetworkParams,
    ScenarioEvent,
    ThreeBusNti,
    assemble,
    bifurcation_sweep,
    find_equilibrium,
    hopf_onset,
    run_scenario,
)
from src.bench.scenarios import build_schedule
from src.bench.three_bus import EXPECTED_COUNTS, _check_counts, _solve, flat_start, load_scaled, source_scaled
from src.blocks import VsmParams
from src.core.cpn1 import eval_residual, residual_norm
from src.core.errors import AssemblyError
from src.linearize import extract_ldss
from src.simulation import SolverConfig
from src.stability import eig_compare, generalized_eig, stability_verdict


@lru_cache(maxsize=None)
def network(variant: str = "full"):
    return assemble(variant=variant)


@lru_cache(maxsize=None)
def equilibrium(variant: str = "full"):
    return find_equilibrium(network(variant))


@lru_cache(maxsize=None)
def spectrum():
    sys_ = extract_ldss(network().model, equilibrium())
    return sys_, generalized_eig(sys_)


SCENARIO_CFG = SolverConfig(max_step=1e-4)
# lifted model vs nonlinear reference, per unit
TRACK_TOL = 10 * SCENARIO_CFG.rel_tol


@lru_cache(maxsize=None)
def scenario(name: str):
    return run_scenario(network(), name, SCENARIO_CFG, equilibrium=equilibrium())


@lru_cache(maxsize=None)
def wide_sweep():
    grid = [round(0.2 + 0.1 * k, 1) for k in range(19)]
    return bifurcation_sweep(network(), grid, threads=2)


def test_assembly_counts():
    print("Testing assembly counts...")
    for variant, (n, m, pq, r) in EXPECTED_COUNTS.items():
        model = network(variant).model
        part = model.partition
        assert (part.n, part.m, part.p + part.q, model.r) == (n, m, pq, r), variant
        assert model.is_square
    full = network().model
    assert full.partition.p == 4
    assert full.partition.q == 28
    assert full.n_eq == 58
    print("✅ Assembly count test passed")


def test_count_check_names_deviation():
    print("Testing count check...")
    try:
        _check_counts(network("gfm").model, "full")
        assert False, "expected AssemblyError"
    except AssemblyError as e:
        assert "n=15 (expected 26)" in str(e)
    print("✅ Count check test passed")


def test_equilibrium():
    print("Testing equilibrium...")
    case, point = network(), equilibrium()
    v = point.v_bar
    assert residual_norm(case.model, point.values) <= 1e-8
    s_b = case.params.s_b
    assert abs(v["p_gfm"] - 0.4 * s_b) <= 1e-6 * s_b
    assert abs(v["p_gfl"] - 0.4 * s_b) <= 1e-6 * s_b
    assert abs(v["omega_vsm"] - 1.0) <= 1e-8
    assert abs(v["zc_vsm"] ** 2 + v["zs_vsm"] ** 2 - 1.0) <= 1e-8
    assert abs(v["zc_pll"] ** 2 + v["zs_pll"] ** 2 - 1.0) <= 1e-8
    for state in case.model.partition.states:
        assert abs(v[f"d_{state}"]) == 0.0
    print("✅ Equilibrium test passed")


def test_flat_start_converges():
    """Gauss-Newton from the flat start meets tight tolerances at nominal and zero loading."""
    print("Testing flat start convergence...")
    case = network()
    refs = case.references()
    unloaded = {**refs, "p_ref_gfm": 0.0, "p_ref_gfl": 0.0}
    for references in (refs, unloaded):
        for tol in (1e-8, 1e-10):
            point = _solve(case, flat_start(case, references), tol)
            assert residual_norm(case.model, point.values) <= tol
    fresh = assemble()
    default = find_equilibrium(fresh)
    assert residual_norm(fresh.model, default.values) <= 1e-8
    print("✅ Flat start convergence test passed")


def test_load_resistance_at_solved_voltage():
    """The closed-form r_load absorbs the nominal references at the solved bus voltage."""
    print("Testing load resistance...")
    params = network().params
    assert params.load_resistance == 1.5 * params.v_peak ** 2 / (params.load_pu * params.s_b)
    assert NetworkParams(r_load=500.0).load_resistance == 500.0
    v = equilibrium().v_bar
    magnitude = np.hypot(v["v_bus_D"], v["v_bus_Q"])
    assert abs(magnitude / params.v_peak - 1.0) < 0.05
    absorbed = 1.5 * magnitude ** 2 / params.load_resistance
    assert abs(absorbed / (params.load_pu * params.s_b) - 1.0) < 0.1
    print("✅ Load resistance test passed")


def test_power_balance():
    """Converter and grid infeed add up to the power absorbed by the load."""
    print("Testing power balance...")
    case, v = network(), equilibrium().v_bar
    bus = np.array([v["v_bus_D"], v["v_bus_Q"]])
    grid = 1.5 * float(bus @ np.array([v["i_grid_D"], v["i_grid_Q"]]))
    load = 1.5 * float(bus @ bus) / case.params.load_resistance
    supplied = v["p_gfm"] + v["p_gfl"] + grid
    assert abs(supplied - load) <= 1e-6 * case.params.s_b
    print("✅ Power balance test passed")


def test_subnetwork_equilibria():
    print("Testing single converter networks...")
    for variant in ("gfm", "gfl"):
        case, point = network(variant), equilibrium(variant)
        assert residual_norm(case.model, point.values) <= 1e-8
        assert abs(point.v_bar[f"p_{variant}"] - 0.4 * case.params.s_b) <= 1e-6 * case.params.s_b
    print("✅ Single converter network test passed")


def test_pencil_structure():
    print("Testing pencil structure...")
    sys_, sol = spectrum()
    assert sys_.dim == 58
    assert sys_.rank_e() == 26
    assert sol.finite.size == 26
    assert sol.infinite_count == 32
    verdict = stability_verdict(sol, 1e-4)
    assert verdict.zero_eigs == 6, verdict.zero_eigs
    assert verdict.stable
    assert verdict.status == "stable"
    print("✅ Pencil structure test passed")


def test_matches_nonlinear_eigenvalues():
    print("Testing eigenvalues against the nonlinear model...")
    case, point = network(), equilibrium()
    _, sol = spectrum()
    nti = ThreeBusNti(case.params)
    x = nti.from_lifted(point.v_bar)
    assert np.max(np.abs(nti.rhs(x, case.references()))) < 1e-6 * case.params.v_peak
    nonzero = sol.finite[np.abs(sol.finite) > 1e-2]
    assert nonzero.size == 20
    match = eig_compare(nonzero, nti.eigenvalues(x, case.references()), tol=1e-3)
    assert not match.unmatched_a and not match.unmatched_b
    assert match.within_tol, match.max_rel
    print("✅ Nonlinear eigenvalue test passed")


def test_parameter_scaling():
    print("Testing load and source scaling...")
    case, point = network(), equilibrium()
    values = point.values
    for scaled, prefix in (
        (load_scaled(case, 2.0), "load.node_"),
        (source_scaled(case, 0.91), "grid.current_"),
    ):
        change = eval_residual(scaled, values) - eval_residual(case.model, values)
        touched = [k for k, label in enumerate(scaled.equations) if label.startswith(prefix)]
        assert len(touched) == 2
        assert np.max(np.abs(change[touched])) > 1.0
        assert not np.any(np.delete(change, touched))
        assert np.array_equal(scaled.s_struct, case.model.s_struct)
    print("✅ Parameter scaling test passed")


def test_scenario_validation():
    print("Testing scenario validation...")
    for kwargs in (
        {"t": 1.0, "target": "load", "value": 2.0, "rate": 0.1},
        {"t": 1.0, "target": "source", "value": -1.0},
    ):
        try:
            ScenarioEvent(**kwargs)
            assert False, f"expected ValidationError for {kwargs}"
        except ValidationError:
            pass
    print("✅ Scenario validation test passed")


def test_scenario_factors():
    print("Testing scenario definitions...")
    small, large = SCENARIOS["small-step"], SCENARIOS["large-step"]
    assert [(e.t, e.target, e.value) for e in small.events] == [(2.5, "load", 0.95)]
    assert [(e.t, e.target, e.value) for e in large.events] == [(2.5, "load", 0.5), (2.6, "source", 0.91)]
    schedule = build_schedule(network(), large)
    assert [s.t for s in schedule.switches] == [2.5, 2.6]
    hopf = build_schedule(network(), SCENARIOS["hopf"])
    assert not hopf.switches
    assert {e.signal for e in hopf.events} == {"p_ref_gfm", "p_ref_gfl"}
    assert all(e.rate > 0.0 for e in hopf.events)
    print("✅ Scenario definition test passed")


def test_small_step_scenario():
    print("Testing small load step...")
    result = scenario("small-step")
    report = result.report()
    assert report["status"] == "stable"
    assert report["finite"] == 26 and report["infinite"] == 32
    offset = result.terminal_offset()
    assert 0.0 < offset < 5e-2, offset
    for name, deviation in result.deviations["nonlinear"].items():
        assert deviation <= TRACK_TOL, (name, deviation)
    assert result.eig_match is not None and result.eig_match.max_rel < 1e-3
    # a lower resistance draws more power, which the grid takes up
    before = result.trajectory.at(2.499)["i_grid_D"]
    after = result.trajectory.final["i_grid_D"]
    assert after > before
    print("✅ Small load step test passed")


def test_large_step_scenario():
    """The linearization drifts away from the lifted model while the lifted model tracks the reference."""
    print("Testing large load step with voltage drop...")
    small, large = scenario("small-step"), scenario("large-step")
    assert large.terminal_offset() > small.terminal_offset()
    for name, deviation in large.deviations["nonlinear"].items():
        assert deviation < 1e-2, (name, deviation)
    v = large.trajectory
    drop = np.hypot(v.final["v_bus_D"], v.final["v_bus_Q"]) / np.hypot(v.at(2.499)["v_bus_D"], v.at(2.499)["v_bus_Q"])
    assert drop < 0.99
    print("✅ Large load step test passed")


def test_printed_damping_is_flagged():
    print("Testing printed VSM damping on the benchmark...")
    assert NetworkParams().vsm.damping == "damping"
    params = NetworkParams(vsm=VsmParams(omega_frame=1.0, damping="printed"))
    case = assemble(params)
    point = find_equilibrium(case)
    verdict = stability_verdict(generalized_eig(extract_ldss(case.model, point)))
    assert verdict.status == "unstable"
    print("✅ Printed damping test passed")


def test_hopf_scenario_ramp():
    """The first second of the ramp: stable at t_lin and the power follows the reference."""
    print("Testing Hopf ramp scenario...")
    short = SCENARIOS["hopf"].model_copy(update={"t_span": (0.0, 1.0)})
    result = run_scenario(network(), short, SolverConfig(max_step=5e-4), compare=False, equilibrium=equilibrium())
    assert result.verdict.stable
    assert result.nonlinear is None
    s_b = network().params.s_b
    target = (0.4 + 0.3 * 0.9) * s_b
    for name in ("p_gfm", "p_gfl"):
        assert abs(result.trajectory.final[name] - target) < 0.1 * s_b, name
    print("✅ Hopf ramp scenario test passed")


def test_sweep_continuation():
    print("Testing reference sweep...")
    result = bifurcation_sweep(network(), [0.3, 0.35, 0.4], threads=2)
    assert [pt.p_ref for pt in result.points] == [0.3, 0.35, 0.4]
    assert result.truncated_at is None
    assert result.last_feasible == 0.4
    s_b = NetworkParams().s_b
    for pt in result.points:
        assert abs(pt.point.v_bar["p_gfm"] - pt.p_ref * s_b) <= 1e-6 * s_b
        assert pt.verdict.stable
    expected = spectrum()[1].finite
    last = result.points[-1].gep.finite
    assert eig_compare(expected, last).max_abs < 1e-6 * max(1.0, float(np.max(np.abs(expected))))
    print("✅ Reference sweep test passed")


def test_sweep_finds_crossing():
    print("Testing sweep to the stability boundary...")
    result = wide_sweep()
    assert result.crossing is not None
    if result.truncated_at is not None:
        assert result.crossing < result.truncated_at
    k = [pt.p_ref for pt in result.points].index(result.crossing)
    assert result.points[k - 1].dominant_oscillatory.real <= 0.0 < result.points[k].dominant_oscillatory.real
    print(f"✅ Sweep crossing test passed (p_ref = {result.crossing})")


def test_hopf_oscillation_is_sustained():
    print("Testing oscillation past the crossing...")
    onset = hopf_onset(network(), wide_sweep())
    assert onset.p_ref <= wide_sweep().crossing
    assert onset.dominant is not None and onset.dominant.real > 0.0 and onset.dominant.imag != 0.0
    assert onset.sustained, onset.envelopes
    print("✅ Hopf oscillation test passed")


if __name__ == "__main__":
    print("Running 3-bus benchmark tests...\n")
    try:
        test_assembly_counts()
        test_count_check_names_deviation()
        test_equilibrium()
        test_flat_start_converges()
        test_load_resistance_at_solved_voltage()
        test_power_balance()
        test_subnetwork_equilibria()
        test_pencil_structure()
        test_matches_nonlinear_eigenvalues()
        test_parameter_scaling()
        test_scenario_validation()
        test_scenario_factors()
        test_small_step_scenario()
        test_large_step_scenario()
        test_printed_damping_is_flagged()
        test_hopf_scenario_ramp()
        test_sweep_continuation()
        test_sweep_finds_crossing()
        test_hopf_oscillation_is_sustained()
        print("\n✅ All tests passed!")
    except AssertionError as e:
        print(f"\n❌ Test failed: {e}")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
