"""
Classical nonlinear models with the trigonometric terms kept, used as the
reference for the lifted models: the standalone PLL and the full 3-bus network.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from src.bench.params import NetworkParams
from src.blocks.params import PllParams
from src.core.errors import ConvergenceError, DimensionError
from src.core.types import SignalVector

logger = logging.getLogger(__name__)

NTI_STATES = (
    "omega_vsm", "theta_vsm", "xq_filt", "xva_d", "xva_q", "xi_gfm_d", "xi_gfm_q",
    "xi_pll", "theta_pll", "xf_pll", "xi_p", "xi_q", "xi_gfl_d", "xi_gfl_q",
    "i_grid_D", "i_grid_Q", "i_gfm_D", "i_gfm_Q", "i_gfl_D", "i_gfl_Q",
)


def pll_rhs(x: np.ndarray, u: Sequence[float], params: Optional[PllParams] = None) -> np.ndarray:
    """dx1 = x2 - k_p e, dx2 = -k_i e with e = u1 sin x1 + u2 cos x1."""
    params = params or PllParams()
    e = u[0] * math.sin(x[0]) + u[1] * math.cos(x[0])
    return np.array([x[1] - params.k_p * e, -params.k_i * e])


def pll_jacobian(x: np.ndarray, u: Sequence[float], params: Optional[PllParams] = None) -> np.ndarray:
    params = params or PllParams()
    de = u[0] * math.cos(x[0]) - u[1] * math.sin(x[0])
    return np.array([[-params.k_p * de, 1.0], [-params.k_i * de, 0.0]])


def pll_equilibrium(u: Sequence[float]) -> np.ndarray:
    """The stable equilibrium (phase error zero with positive gain)."""
    return np.array([math.atan2(-u[1], u[0]), 0.0])


def pll_eigenvalues(u: Sequence[float], params: Optional[PllParams] = None) -> np.ndarray:
    x = pll_equilibrium(u)
    return np.sort_complex(linalg.eigvals(pll_jacobian(x, u, params)))


def simulate_pll(
    x0: Sequence[float],
    u: Sequence[float],
    t_span: Tuple[float, float],
    t_eval: Optional[np.ndarray] = None,
    params: Optional[PllParams] = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
):
    """Integrate the PLL for constant inputs; returns (times, states) with states shaped (T, 2)."""
    sol = solve_ivp(
        lambda t, x: pll_rhs(x, u, params),
        t_span, np.asarray(x0, dtype=float), method="LSODA",
        t_eval=t_eval, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise ConvergenceError(f"PLL integration failed: {sol.message}")
    return sol.t, sol.y.T


@dataclass
class NtiResult:
    times: np.ndarray
    states: np.ndarray
    outputs: Dict[str, np.ndarray] = field(default_factory=dict)
    eigenvalues: Optional[np.ndarray] = None

    def signal(self, name: str) -> np.ndarray:
        if name in NTI_STATES:
            return self.states[:, NTI_STATES.index(name)]
        return self.outputs[name]


class ThreeBusNti:
    """
    The 3-bus network as an explicit 20-state ODE with rotations written as
    cos/sin of the converter angles. load_factor and source_factor scale the
    load resistance and Thevenin source voltage.
    """

    def __init__(self, params: Optional[NetworkParams] = None):
        self.params = params or NetworkParams()
        self.load_factor = 1.0
        self.source_factor = 1.0
        self._grid = self.params.grid_branch()
        self._filter = self.params.filter_branch()

    @property
    def state_names(self) -> Tuple[str, ...]:
        return NTI_STATES

    def _algebraic(self, x: np.ndarray, u: Mapping[str, float]) -> Dict[str, float]:
        prm = self.params
        s = dict(zip(NTI_STATES, x))
        r_load = prm.load_resistance * self.load_factor
        out: Dict[str, float] = {
            "v_bus_D": r_load * (s["i_grid_D"] + s["i_gfm_D"] + s["i_gfl_D"]),
            "v_bus_Q": r_load * (s["i_grid_Q"] + s["i_gfm_Q"] + s["i_gfl_Q"]),
        }
        for tag, angle in (("gfm", s["theta_vsm"]), ("gfl", s["theta_pll"])):
            h1, h2 = math.cos(angle), math.sin(angle)
            out[f"h1_{tag}"], out[f"h2_{tag}"] = h1, h2
            big_d, big_q = out["v_bus_D"], out["v_bus_Q"]
            vd, vq = h1 * big_d + h2 * big_q, -h2 * big_d + h1 * big_q
            i_d = h1 * s[f"i_{tag}_D"] + h2 * s[f"i_{tag}_Q"]
            i_q = -h2 * s[f"i_{tag}_D"] + h1 * s[f"i_{tag}_Q"]
            out.update({
                f"v_{tag}_d": vd, f"v_{tag}_q": vq, f"i_{tag}_d": i_d, f"i_{tag}_q": i_q,
                f"p_{tag}": 1.5 * (vd * i_d + vq * i_q),
                f"q_{tag}": 1.5 * (vq * i_d - vd * i_q),
            })

        # GFM cascade
        out["vd_star"] = (
            prm.droop.v_peak * u["v_ref"] - prm.droop.k_q * s["xq_filt"]
            + prm.droop.k_q * prm.droop.s_b * u["q_ref_gfm"]
        )
        out["iref_gfm_d"] = s["xva_d"] / prm.va.l_v
        out["iref_gfm_q"] = s["xva_q"] / prm.va.l_v
        self._converter_voltage(out, s, "gfm", prm.cc_gfm.omega_b * s["omega_vsm"])

        # GFL cascade
        out["dw_pll"] = prm.pll.k_p * out["v_gfl_q"] + s["xi_pll"]
        err_p = prm.pq.s_b * u["p_ref_gfl"] - out["p_gfl"]
        err_q = prm.pq.s_b * u["q_ref_gfl"] - out["q_gfl"]
        out["iref_gfl_d"] = prm.pq.k_p * err_p + s["xi_p"]
        out["iref_gfl_q"] = -prm.pq.k_p * err_q - s["xi_q"]
        self._converter_voltage(out, s, "gfl", prm.omega_b + out["dw_pll"])
        return out

    def _converter_voltage(self, out: Dict[str, float], s: Mapping[str, float], tag: str, w: float) -> None:
        cc = self.params.cc_gfm if tag == "gfm" else self.params.cc_gfl
        err = (out[f"iref_{tag}_d"] - out[f"i_{tag}_d"], out[f"iref_{tag}_q"] - out[f"i_{tag}_q"])
        cross = (-out[f"i_{tag}_q"], out[f"i_{tag}_d"])
        e_d = cc.k_p * err[0] + cc.k_i * s[f"xi_{tag}_d"] + cc.l_f * w * cross[0] + out[f"v_{tag}_d"]
        e_q = cc.k_p * err[1] + cc.k_i * s[f"xi_{tag}_q"] + cc.l_f * w * cross[1] + out[f"v_{tag}_q"]
        h1, h2 = out[f"h1_{tag}"], out[f"h2_{tag}"]
        out[f"e_{tag}_d"], out[f"e_{tag}_q"] = e_d, e_q
        out[f"e_{tag}_D"] = h1 * e_d - h2 * e_q
        out[f"e_{tag}_Q"] = h2 * e_d + h1 * e_q

    def rhs(self, x: np.ndarray, u: Mapping[str, float]) -> np.ndarray:
        prm = self.params
        s = dict(zip(NTI_STATES, x))
        a = self._algebraic(x, u)
        d: Dict[str, float] = {}

        vsm = prm.vsm
        sign = 1.0 if vsm.damping == "damping" else -1.0
        d["omega_vsm"] = (
            u["p_ref_gfm"] - a["p_gfm"] / vsm.s_b - sign * vsm.k_d * (s["omega_vsm"] - u["omega_ref"])
        ) / (2.0 * vsm.h)
        d["theta_vsm"] = vsm.omega_b * (s["omega_vsm"] - vsm.omega_frame)
        d["xq_filt"] = prm.droop.omega_f * (a["q_gfm"] - s["xq_filt"])
        c = 1.0 if prm.va.coupling == "printed" else -1.0
        ratio = prm.va.r_v / prm.va.l_v
        d["xva_d"] = -ratio * s["xva_d"] + c * prm.va.omega_b * -s["xva_q"] + a["vd_star"] - a["v_gfm_d"]
        d["xva_q"] = -ratio * s["xva_q"] + c * prm.va.omega_b * s["xva_d"] - a["v_gfm_q"]

        d["xi_pll"] = prm.pll.k_i * a["v_gfl_q"]
        d["theta_pll"] = a["dw_pll"]
        d["xf_pll"] = prm.pll.omega_f * (a["dw_pll"] - s["xf_pll"])
        d["xi_p"] = prm.pq.k_i * (prm.pq.s_b * u["p_ref_gfl"] - a["p_gfl"])
        d["xi_q"] = prm.pq.k_i * (prm.pq.s_b * u["q_ref_gfl"] - a["q_gfl"])
        for tag, cc in (("gfm", prm.cc_gfm), ("gfl", prm.cc_gfl)):
            gain = cc.k_i if cc.integrator == "printed" else 1.0
            d[f"xi_{tag}_d"] = gain * (a[f"iref_{tag}_d"] - a[f"i_{tag}_d"])
            d[f"xi_{tag}_q"] = gain * (a[f"iref_{tag}_q"] - a[f"i_{tag}_q"])

        source = self.source_factor * prm.source_scale * prm.v_peak
        branches = [
            ("grid", self._grid, (source, 0.0)),
            ("gfm", self._filter, (a["e_gfm_D"], a["e_gfm_Q"])),
            ("gfl", self._filter, (a["e_gfl_D"], a["e_gfl_Q"])),
        ]
        for tag, br, node_k in branches:
            i_d, i_q = s[f"i_{tag}_D"], s[f"i_{tag}_Q"]
            d[f"i_{tag}_D"] = -(br.r / br.l) * i_d + br.omega_g * i_q + (node_k[0] - a["v_bus_D"]) / br.l
            d[f"i_{tag}_Q"] = -(br.r / br.l) * i_q - br.omega_g * i_d + (node_k[1] - a["v_bus_Q"]) / br.l
        return np.array([d[name] for name in NTI_STATES])

    def outputs(self, x: np.ndarray, u: Mapping[str, float]) -> Dict[str, float]:
        return self._algebraic(x, u)

    def jacobian(self, x: np.ndarray, u: Mapping[str, float], step: float = 1e-6) -> np.ndarray:
        """Central differences with steps scaled by max(1, |x_i|)."""
        x = np.asarray(x, dtype=float)
        jac = np.empty((x.size, x.size))
        for k in range(x.size):
            h = step * max(1.0, abs(x[k]))
            up, down = x.copy(), x.copy()
            up[k] += h
            down[k] -= h
            jac[:, k] = (self.rhs(up, u) - self.rhs(down, u)) / (2.0 * h)
        return jac

    def eigenvalues(self, x: np.ndarray, u: Mapping[str, float]) -> np.ndarray:
        return linalg.eigvals(self.jacobian(x, u))

    def from_lifted(self, v: SignalVector) -> np.ndarray:
        """State vector of a lifted-model point; angles are taken relative to the grid lift."""
        grid = math.atan2(v["zs_grid"], v["zc_grid"])
        values = []
        for name in NTI_STATES:
            if name == "theta_vsm":
                values.append(math.atan2(v["zs_vsm"], v["zc_vsm"]) - grid)
            elif name == "theta_pll":
                values.append(math.atan2(v["zs_pll"], v["zc_pll"]) - grid)
            else:
                values.append(v[name])
        return np.array(values)

    def simulate(
        self,
        x0: np.ndarray,
        references: Mapping[str, float],
        t_span: Tuple[float, float],
        events: Sequence[Tuple[float, str, float]] = (),
        max_step: float = 1e-4,
        rtol: float = 1e-8,
        atol: float = 1e-8,
        method: str = "LSODA",
    ) -> NtiResult:
        """
        Piecewise integration between events.

        Each event (t, target, value) sets an input signal, or the "load" or
        "source" scaling factor, for all times after t.
        """
        u = dict(references)
        saved = (self.load_factor, self.source_factor)
        t0, t1 = t_span
        breaks = sorted(e for e in events if t0 <= e[0] < t1)
        times: List[np.ndarray] = []
        states: List[np.ndarray] = []
        x = np.asarray(x0, dtype=float)
        if x.size != len(NTI_STATES):
            raise DimensionError(f"expected {len(NTI_STATES)} states, got {x.size}")
        start = t0
        try:
            for stop, target, value in [*breaks, (t1, None, None)]:
                if stop > start:
                    sol = solve_ivp(
                        lambda t, y: self.rhs(y, u), (start, stop), x,
                        method=method, max_step=max_step, rtol=rtol, atol=atol,
                    )
                    if not sol.success:
                        raise ConvergenceError(f"nonlinear reference failed at t={sol.t[-1]:.6g}: {sol.message}")
                    skip = 1 if times else 0
                    times.append(sol.t[skip:])
                    states.append(sol.y.T[skip:])
                    x = sol.y[:, -1]
                    start = stop
                if target == "load":
                    self.load_factor = value
                elif target == "source":
                    self.source_factor = value
                elif target is not None:
                    u[target] = value
            t_all = np.concatenate(times) if times else np.array([t0])
            x_all = np.vstack(states) if states else x[None, :]
            outs = [self._algebraic(row, u) for row in x_all]
        finally:
            self.load_factor, self.source_factor = saved
        keys = outs[0].keys()
        outputs = {key: np.array([o[key] for o in outs]) for key in keys}
        logger.info("nonlinear reference: %d samples over [%g, %g]", t_all.size, t0, t1)
        return NtiResult(t_all, x_all, outputs)


def nonlinear_reference(
    params: Optional[NetworkParams],
    point: SignalVector,
    t_span: Optional[Tuple[float, float]] = None,
    events: Sequence[Tuple[float, str, float]] = (),
    max_step: float = 1e-4,
) -> NtiResult:
    """
    Eigenvalues of the unlifted model at the lifted equilibrium, and its
    trajectory over t_span when one is given.
    """
    nti = ThreeBusNti(params)
    x0 = nti.from_lifted(point)
    refs = {name: point[name] for name in nti.params.references()}
    eigs = nti.eigenvalues(x0, refs)
    if t_span is None:
        return NtiResult(np.array([0.0]), x0[None, :], eigenvalues=eigs)
    result = nti.simulate(x0, refs, t_span, events, max_step=max_step)
    result.eigenvalues = eigs
    return result
