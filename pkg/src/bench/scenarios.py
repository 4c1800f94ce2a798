"""
Disturbance scenarios of the 3-bus benchmark and the comparison of the
lifted model against its linearization and the nonlinear reference.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.bench.nonlinear import NtiResult, nonlinear_reference
from src.bench.three_bus import NetworkCase, find_equilibrium, load_scaled, source_scaled
from src.core.types import SignalVector
from src.linearize.jacobian import OperatingPoint
from src.linearize.ldss import DescriptorSystem, descriptor_to_model, extract_ldss
from src.simulation.config import SolverConfig
from src.simulation.dae import Trajectory, simulate
from src.simulation.schedule import InputEvent, InputSchedule, ModelSwitch
from src.stability.compare import EigMatch, eig_compare
from src.stability.gep import GepSolution, StabilityVerdict, generalized_eig, stability_verdict
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

PARAMETER_TARGETS = ("load", "source")

# signals compared between models, with the scale that makes them per unit
COMPARED = ("p_gfm", "q_gfm", "p_gfl", "q_gfl", "omega_vsm", "xf_pll", "v_bus_D", "v_bus_Q")


class ScenarioEvent(BaseModel):
    """
    At time t set target to value, then ramp it at rate per second.

    target "load" or "source" multiplies the load resistance or the grid source
    voltage by value; any other target names an input signal.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    t: float
    target: str
    value: float
    rate: float = 0.0

    @model_validator(mode="after")
    def _no_parameter_ramps(self) -> "ScenarioEvent":
        if self.target in PARAMETER_TARGETS and self.rate != 0.0:
            raise ValueError(f"{self.target} scaling cannot be ramped")
        if self.target in PARAMETER_TARGETS and self.value <= 0.0:
            raise ValueError(f"{self.target} factor must be positive")
        return self


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    t_span: Tuple[float, float]
    t_lin: float
    events: List[ScenarioEvent] = Field(default_factory=list)
    compare_nonlinear: bool = True

    @model_validator(mode="after")
    def _within_span(self) -> "Scenario":
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ValueError(f"empty time span {self.t_span}")
        if not t0 <= self.t_lin <= t1:
            raise ValueError(f"linearization time {self.t_lin} outside {self.t_span}")
        for event in self.events:
            if not t0 <= event.t < t1:
                raise ValueError(f"event at t={event.t} outside {self.t_span}")
        return self

    @property
    def has_ramps(self) -> bool:
        return any(event.rate != 0.0 for event in self.events)


SCENARIOS: Dict[str, Scenario] = {
    "small-step": Scenario(
        name="small-step",
        t_span=(2.4, 3.0),
        t_lin=2.499,
        events=[ScenarioEvent(t=2.5, target="load", value=0.95)],
    ),
    "large-step": Scenario(
        name="large-step",
        t_span=(2.4, 3.2),
        t_lin=2.499,
        events=[
            ScenarioEvent(t=2.5, target="load", value=0.5),
            ScenarioEvent(t=2.6, target="source", value=0.91),
        ],
    ),
    "hopf": Scenario(
        name="hopf",
        t_span=(0.0, 4.0),
        t_lin=0.099,
        events=[
            ScenarioEvent(t=0.1, target="p_ref_gfm", value=0.4, rate=0.3),
            ScenarioEvent(t=0.1, target="p_ref_gfl", value=0.4, rate=0.3),
        ],
        compare_nonlinear=False,
    ),
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario '{name}' (choose from {', '.join(SCENARIOS)})") from None


def build_schedule(case: NetworkCase, scenario: Scenario) -> InputSchedule:
    """Input events plus one model switch per parameter event, each carrying all earlier factors."""
    inputs: List[InputEvent] = []
    switches: List[ModelSwitch] = []
    factors = {"load": 1.0, "source": 1.0}
    for event in sorted(scenario.events, key=lambda e: e.t):
        if event.target in PARAMETER_TARGETS:
            factors[event.target] = event.value
            model = source_scaled(case, factors["source"], load_scaled(case, factors["load"]))
            label = f"load x{factors['load']:g}, source x{factors['source']:g}"
            switches.append(ModelSwitch(event.t, model, label))
        else:
            inputs.append(InputEvent(t=event.t, signal=event.target, value=event.value, rate=event.rate))
    return InputSchedule(inputs, switches)


def linear_schedule(case: NetworkCase, scenario: Scenario, point: SignalVector, base: DescriptorSystem) -> InputSchedule:
    """
    The same disturbances for the deviation model: input events shift by the
    linearization point, parameter events relinearize the switched model there.
    """
    nonlinear = build_schedule(case, scenario)
    inputs = [
        InputEvent(t=e.t, signal=e.signal, value=e.value - point[e.signal], rate=e.rate)
        for e in nonlinear.events
    ]
    switches = []
    for switch in nonlinear.switches:
        sys = extract_ldss(switch.model, point, require_equilibrium=False)
        switches.append(ModelSwitch(switch.t, descriptor_to_model(sys), switch.label))
    return InputSchedule(inputs, switches)


@dataclass(eq=False)
class ScenarioResult:
    scenario: Scenario
    equilibrium: OperatingPoint
    trajectory: Trajectory
    ldss: DescriptorSystem
    gep: GepSolution
    verdict: StabilityVerdict
    linear_trajectory: Optional[Trajectory] = None
    nonlinear: Optional[NtiResult] = None
    eig_match: Optional[EigMatch] = None
    deviations: Dict[str, Dict[str, float]] = field(default_factory=dict)
    scales: Dict[str, float] = field(default_factory=dict)

    def linear_signal(self, name: str) -> np.ndarray:
        """Absolute value of a signal along the linear trajectory."""
        if self.linear_trajectory is None:
            raise ValueError("scenario was run without the linear comparison")
        return self.ldss.point.v_bar[name] + self.linear_trajectory.signal(name)

    def terminal_offset(self) -> float:
        """Largest per-unit gap between the linear and lifted trajectories at the end of the span."""
        final = self.trajectory.final
        offsets = [
            abs(self.linear_signal(name)[-1] - final[name]) / scale
            for name, scale in self.scales.items()
        ]
        return max(offsets, default=0.0)

    def report(self) -> dict:
        out = {
            "scenario": self.scenario.name,
            "t_lin": self.scenario.t_lin,
            "status": self.verdict.status,
            "margin": self.verdict.margin if np.isfinite(self.verdict.margin) else None,
            "zero_eigs": self.verdict.zero_eigs,
            "finite": int(self.gep.finite.size),
            "infinite": int(self.gep.infinite_count),
            "rank_e": self.ldss.rank_e(),
            "steps": self.trajectory.solver_stats.get("steps", 0),
            "max_deviation": self.deviations,
        }
        if self.eig_match is not None:
            out["eig_match"] = self.eig_match.as_dict()
        return out


def _scales(case: NetworkCase) -> Dict[str, float]:
    prm = case.params
    return {
        "p_gfm": prm.s_b, "q_gfm": prm.s_b, "p_gfl": prm.s_b, "q_gfl": prm.s_b,
        "omega_vsm": 1.0, "xf_pll": prm.omega_b,
        "v_bus_D": prm.v_peak, "v_bus_Q": prm.v_peak,
    }


def _deviation(times: np.ndarray, reference: np.ndarray, t_other: np.ndarray, other: np.ndarray, scale: float) -> float:
    resampled = np.interp(times, t_other, other)
    return float(np.max(np.abs(reference - resampled), initial=0.0) / scale)


def run_scenario(
    case: NetworkCase,
    scenario: Union[Scenario, str],
    cfg: Optional[SolverConfig] = None,
    compare: bool = True,
    equilibrium: Optional[OperatingPoint] = None,
) -> ScenarioResult:
    """
    Simulate the lifted model through the scenario, linearize it at t_lin and
    solve the pencil; with compare also run the deviation model and, for
    scenarios without ramps, the nonlinear reference.
    """
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    cfg = cfg or SolverConfig()
    settings = get_settings()
    eq = equilibrium or find_equilibrium(case)
    schedule = build_schedule(case, scenario)
    logger.info("running scenario %s over %s", scenario.name, scenario.t_span)
    traj = simulate(case.model, eq.v_bar, schedule, scenario.t_span, cfg)

    point = traj.at(scenario.t_lin)
    active = schedule.model_at(scenario.t_lin, case.model)
    ldss = extract_ldss(active, point, require_equilibrium=False)
    gep = generalized_eig(ldss)
    verdict = stability_verdict(gep, settings.stab_tol)
    result = ScenarioResult(scenario, eq, traj, ldss, gep, verdict)
    if not compare:
        return result

    window = traj.window(scenario.t_lin, scenario.t_span[1])
    lin_model = descriptor_to_model(ldss)
    lin_schedule = linear_schedule(case, scenario, point, ldss)
    zero = SignalVector(np.zeros(ldss.partition.n_v), ldss.partition)
    result.linear_trajectory = simulate(
        lin_model, zero, lin_schedule, (scenario.t_lin, scenario.t_span[1]), cfg,
        init_tol=max(settings.eq_tol, float(np.max(np.abs(ldss.c), initial=0.0))),
    )
    scales = _scales(case)
    compared = [name for name in COMPARED if name in case.model.partition]
    result.scales = {name: scales[name] for name in compared}
    result.deviations["linear"] = {
        name: _deviation(
            window.times, window.signal(name),
            result.linear_trajectory.times, result.linear_signal(name), scales[name],
        )
        for name in compared
    }

    if scenario.compare_nonlinear and not scenario.has_ramps and case.variant == "full":
        events = [(e.t, e.target, e.value) for e in scenario.events]
        nti = nonlinear_reference(
            case.params, point, (scenario.t_lin, scenario.t_span[1]), events, max_step=cfg.max_step
        )
        result.nonlinear = nti
        result.deviations["nonlinear"] = {
            name: _deviation(window.times, window.signal(name), nti.times, nti.signal(name), scales[name])
            for name in compared
        }
        nonzero = gep.finite[np.abs(gep.finite) > settings.stab_tol * 1e2]
        result.eig_match = eig_compare(nonzero, nti.eigenvalues)
    logger.info("scenario %s: %s, deviations %s", scenario.name, verdict.status, result.deviations)
    return result
