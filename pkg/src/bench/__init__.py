from src.bench.params import NetworkParams
from src.bench.three_bus import NetworkCase, assemble, assemble_3bus, find_equilibrium
from src.bench.scenarios import SCENARIOS, Scenario, ScenarioEvent, ScenarioResult, run_scenario
from src.bench.sweep import HopfOnset, SweepResult, bifurcation_sweep, hopf_onset, refine_crossing
from src.bench.nonlinear import ThreeBusNti, nonlinear_reference

__all__ = [
    "NetworkParams",
    "NetworkCase",
    "assemble",
    "assemble_3bus",
    "find_equilibrium",
    "SCENARIOS",
    "Scenario",
    "ScenarioEvent",
    "ScenarioResult",
    "run_scenario",
    "SweepResult",
    "bifurcation_sweep",
    "HopfOnset",
    "hopf_onset",
    "refine_crossing",
    "ThreeBusNti",
    "nonlinear_reference",
]
