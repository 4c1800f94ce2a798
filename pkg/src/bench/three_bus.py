"""
Assembly of the 3-bus benchmark and its equilibrium finder.

The global DQ frame rotates at nominal frequency, so converter angles are
measured against it and the grid lift stays at rest.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.blocks.converters import (
    current_control_block,
    droop_q_block,
    power_block,
    pq_control_block,
    virtual_admittance_block,
    vsm_block,
    vsm_lift,
)
from src.blocks.lifts import TrigLift, rotate_block, rotation_block
from src.blocks.network import GRID_LIFT, grid_frame_block, resistive_load_block, rl_branch_block
from src.blocks.pll import srf_pll_block
from src.bench.params import NetworkParams
from src.core.cpn1 import compose, merge_duplicate_factors
from src.core.errors import AssemblyError, ConvergenceError
from src.core.types import Cpn1Model, SignalVector, derivative_name
from src.linearize.jacobian import OperatingPoint
from src.simulation.dae import consistent_init
from src.simulation.schedule import scaled_model
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

GFM_STATES = (
    "omega_vsm", "theta_vsm", "zc_vsm", "zs_vsm", "xq_filt",
    "xva_d", "xva_q", "xi_gfm_d", "xi_gfm_q",
)
GFL_STATES = (
    "zc_pll", "zs_pll", "xi_pll", "theta_pll", "xf_pll",
    "xi_p", "xi_q", "xi_gfl_d", "xi_gfl_q",
)
GRID_STATES = (
    "i_grid_D", "i_grid_Q", "i_gfm_D", "i_gfm_Q", "i_gfl_D", "i_gfl_Q",
    "zc_grid", "zs_grid",
)
INPUTS = ("p_ref_gfm", "q_ref_gfm", "omega_ref", "v_ref", "p_ref_gfl", "q_ref_gfl")
BUS = ("v_bus_D", "v_bus_Q")
PLL_LIFT = TrigLift("theta_pll", "zc_pll", "zs_pll", "dw_pll")

Variant = Literal["full", "gfm", "gfl"]

# (n, m, p + q, R) per variant. The reference single-converter counts are
# (16, 6, 17, 87) for the GFM and (15, 6, 17, 95) for the GFL network; no split of
# the fragments that give the full (26, 6, 32, 165) reproduces both, so the
# gfm and gfl entries are the counts these fragments assemble to.
EXPECTED_COUNTS: Dict[str, Tuple[int, int, int, int]] = {
    "full": (26, 6, 32, 165),
    "gfm": (15, 6, 17, 90),
    "gfl": (15, 6, 17, 88),
}


@dataclass(frozen=True, eq=False)
class NetworkCase:
    model: Cpn1Model
    params: NetworkParams
    variant: str = "full"
    state_map: Dict[str, Tuple[str, ...]] = field(default_factory=dict)

    def references(self) -> Dict[str, float]:
        return self.params.references()


def gfm_fragments(params: NetworkParams) -> List[Cpn1Model]:
    h = ("h1_gfm", "h2_gfm")
    cascade = compose([
        droop_q_block(params.droop),
        virtual_admittance_block(params.va),
        current_control_block(params.cc_gfm, tag="gfm", omega="omega_vsm"),
    ])
    return [
        vsm_block(params.vsm),
        rotation_block(vsm_lift(), GRID_LIFT, h, BUS, ("v_gfm_d", "v_gfm_q"), name="rotation_gfm"),
        rotate_block(h, ("i_gfm_D", "i_gfm_Q"), ("i_gfm_d", "i_gfm_q"), name="rotate_i_gfm"),
        power_block("gfm"),
        merge_duplicate_factors(cascade),
        rotate_block(h, ("e_gfm_d", "e_gfm_q"), ("e_gfm_D", "e_gfm_Q"), inverse=True, name="inverse_gfm"),
    ]


def gfl_fragments(params: NetworkParams) -> List[Cpn1Model]:
    h = ("h1_gfl", "h2_gfl")
    return [
        srf_pll_block(params.pll, tag="pll", v_q="v_gfl_q"),
        rotation_block(PLL_LIFT, GRID_LIFT, h, BUS, ("v_gfl_d", "v_gfl_q"), name="rotation_gfl"),
        rotate_block(h, ("i_gfl_D", "i_gfl_Q"), ("i_gfl_d", "i_gfl_q"), name="rotate_i_gfl"),
        power_block("gfl"),
        pq_control_block(params.pq, tag="gfl"),
        current_control_block(
            params.cc_gfl, tag="gfl", omega="dw_pll", omega_scale=1.0, omega_offset=params.omega_b
        ),
        rotate_block(h, ("e_gfl_d", "e_gfl_q"), ("e_gfl_D", "e_gfl_Q"), inverse=True, name="inverse_gfl"),
    ]


def grid_fragments(params: NetworkParams, converters: Sequence[str] = ("gfm", "gfl")) -> List[Cpn1Model]:
    grid = params.grid_branch()
    filt = params.filter_branch()
    parts = [
        rl_branch_block(
            grid,
            states=("i_grid_D", "i_grid_Q"),
            node_l=BUS,
            source=(params.source_scale * params.v_peak, 0.0),
            name="grid",
        )
    ]
    for tag in converters:
        parts.append(
            rl_branch_block(
                filt,
                states=(f"i_{tag}_D", f"i_{tag}_Q"),
                node_k=(f"e_{tag}_D", f"e_{tag}_Q"),
                node_l=BUS,
                name=f"filter_{tag}",
            )
        )
    currents = [("i_grid_D", "i_grid_Q")] + [(f"i_{tag}_D", f"i_{tag}_Q") for tag in converters]
    parts.append(resistive_load_block(params.load(), currents))
    parts.append(grid_frame_block(0.0))
    return parts


def _check_counts(model: Cpn1Model, variant: str) -> None:
    part = model.partition
    found = (part.n, part.m, part.p + part.q, model.r)
    expected = EXPECTED_COUNTS[variant]
    if found != expected:
        labels = ("n", "m", "p+q", "R")
        diff = ", ".join(
            f"{label}={f} (expected {e})" for label, f, e in zip(labels, found, expected) if f != e
        )
        raise AssemblyError(f"{variant} assembly deviates: {diff}")
    if not model.is_square:
        raise AssemblyError(f"{variant} assembly is not square ({model.n_eq} equations)")


def assemble(params: Optional[NetworkParams] = None, variant: Variant = "full") -> NetworkCase:
    """
    Compose the benchmark (or one converter with the grid) and check its dimensions.

    Raises:
        AssemblyError: a subsystem has unexpected counts
    """
    params = params or NetworkParams()
    state_map: Dict[str, Tuple[str, ...]] = {}
    parts: List[Cpn1Model] = []
    converters: List[str] = []
    if variant in ("full", "gfm"):
        parts += gfm_fragments(params)
        converters.append("gfm")
        state_map["gfm"] = GFM_STATES
    if variant in ("full", "gfl"):
        parts += gfl_fragments(params)
        converters.append("gfl")
        state_map["gfl"] = GFL_STATES
    parts += grid_fragments(params, converters)
    model = compose(parts, inputs=INPUTS)
    state_map["grid"] = tuple(s for s in GRID_STATES if s in model.partition)
    for group, names in state_map.items():
        missing = [name for name in names if name not in model.partition]
        if missing:
            raise AssemblyError(f"{group} subsystem lacks states {', '.join(missing)}")
    _check_counts(model, variant)
    logger.info(
        "assembled %s network: n=%d m=%d p+q=%d R=%d",
        variant, model.partition.n, model.partition.m,
        model.partition.p + model.partition.q, model.r,
    )
    return NetworkCase(model, params, variant, state_map)


def assemble_3bus(params: Optional[NetworkParams] = None) -> NetworkCase:
    return assemble(params, "full")


def flat_start(case: NetworkCase, references: Mapping[str, float]) -> Dict[str, float]:
    """Guess with aligned frames, nominal voltages and currents matching the power references."""
    params = case.params
    v = params.v_peak * references.get("v_ref", 1.0)
    i_base = params.s_b / (1.5 * v)
    guess: Dict[str, float] = {
        "omega_vsm": 1.0,
        "zc_vsm": 1.0, "zc_pll": 1.0, "zc_grid": 1.0,
        "h1_gfm": 1.0, "h1_gfl": 1.0,
        "v_bus_D": v, "vd_star": v,
    }
    load_current = v / params.load_resistance
    supplied = 0.0
    for tag in ("gfm", "gfl"):
        if tag not in case.state_map:
            continue
        p = references.get(f"p_ref_{tag}", 0.0)
        q = references.get(f"q_ref_{tag}", 0.0)
        i_d, i_q = p * i_base, -q * i_base
        supplied += i_d
        guess.update({
            f"v_{tag}_d": v, f"e_{tag}_d": v, f"e_{tag}_D": v,
            f"i_{tag}_D": i_d, f"i_{tag}_Q": i_q, f"i_{tag}_d": i_d, f"i_{tag}_q": i_q,
            f"iref_{tag}_d": i_d, f"iref_{tag}_q": i_q,
            f"p_{tag}": p * params.s_b, f"q_{tag}": q * params.s_b,
        })
    if "gfm" in case.state_map:
        guess["xva_d"] = params.va.l_v * guess["iref_gfm_d"]
        guess["xva_q"] = params.va.l_v * guess["iref_gfm_q"]
        guess["xq_filt"] = guess["q_gfm"]
    if "gfl" in case.state_map:
        guess["xi_p"] = guess["iref_gfl_d"]
        guess["xi_q"] = -guess["iref_gfl_q"]
    guess["i_grid_D"] = load_current - supplied
    guess.update(references)
    return guess


def _solve(case: NetworkCase, guess: Dict[str, float], tol: float) -> SignalVector:
    part = case.model.partition
    start = SignalVector.from_mapping(part, {k: v for k, v in guess.items() if k in part})
    start = start.replace({derivative_name(s): 0.0 for s in part.states})
    frozen = [derivative_name(s) for s in part.states] + list(part.inputs)
    return consistent_init(case.model, start, frozen=frozen, tol=tol, max_iters=60)


def find_equilibrium(
    case: NetworkCase,
    references: Optional[Mapping[str, float]] = None,
    guess: Optional[SignalVector] = None,
    tol: Optional[float] = None,
    homotopy_steps: int = 10,
) -> OperatingPoint:
    """
    Steady state with dz = 0 and frozen inputs.

    Starts from guess (or a flat start); on failure ramps the power references
    up from zero in homotopy_steps stages.

    Raises:
        ConvergenceError: even the ramped continuation failed
    """
    refs = dict(case.references())
    refs.update(references or {})
    tol = get_settings().eq_tol * 1e-2 if tol is None else tol
    part = case.model.partition
    if guess is not None:
        start = guess.as_dict()
        start.update(refs)
    else:
        start = flat_start(case, refs)
    try:
        return OperatingPoint(_solve(case, start, tol))
    except ConvergenceError as exc:
        logger.warning("equilibrium from %s failed (%s); ramping references", "guess" if guess else "flat start", exc)

    powers = [name for name in ("p_ref_gfm", "q_ref_gfm", "p_ref_gfl", "q_ref_gfl") if name in refs]
    current = flat_start(case, {**refs, **{name: 0.0 for name in powers}})
    point = None
    for k in range(homotopy_steps + 1):
        level = k / homotopy_steps
        stage = dict(refs)
        stage.update({name: level * refs[name] for name in powers})
        current.update(stage)
        try:
            point = _solve(case, current, tol)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"equilibrium continuation failed at {level:.0%} of the power references; "
                "try a lower loading level",
                exc.residual_norm,
                exc.deficient_equations,
            ) from exc
        current = {name: float(x) for name, x in zip(part.names, point.values)}
    return OperatingPoint(point)


def _rows(model: Cpn1Model, labels: Sequence[str]) -> List[int]:
    rows = [k for k, label in enumerate(model.equations) if label in labels]
    if len(rows) != len(labels):
        raise AssemblyError(f"equations {', '.join(labels)} not found in the model")
    return rows


def load_scaled(case: NetworkCase, factor: float, model: Optional[Cpn1Model] = None) -> Cpn1Model:
    """Model with the load resistance multiplied by factor."""
    model = model or case.model
    rows = _rows(model, ("load.node_D", "load.node_Q"))
    bus = [model.partition.index(name) for name in BUS]
    columns = [
        r for r in range(model.r)
        if np.any(model.phi[rows, r]) and not np.any(model.s_struct[bus, r])
    ]
    return scaled_model(model, rows, columns, factor)


def source_scaled(case: NetworkCase, factor: float, model: Optional[Cpn1Model] = None) -> Cpn1Model:
    """Model with the Thevenin source voltage multiplied by factor."""
    model = model or case.model
    rows = _rows(model, ("grid.current_D", "grid.current_Q"))
    columns = [
        r for r in range(model.r)
        if np.any(model.phi[rows, r]) and not np.any(model.s_struct[:, r])
    ]
    return scaled_model(model, rows, columns, factor)
