"""
Equilibrium continuation in the active power references with a generalized
eigenvalue analysis at every point.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.bench.three_bus import NetworkCase, find_equilibrium
from src.core.errors import ConvergenceError
from src.linearize.jacobian import OperatingPoint
from src.linearize.ldss import extract_ldss
from src.simulation.config import SolverConfig
from src.simulation.dae import Trajectory, simulate
from src.simulation.schedule import InputEvent, InputSchedule
from src.stability.compare import eig_compare
from src.stability.gep import GepSolution, StabilityVerdict, generalized_eig, stability_verdict
from src.utils.config import get_settings

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SweepPoint:
    p_ref: float
    point: OperatingPoint
    gep: GepSolution
    verdict: StabilityVerdict

    @property
    def dominant_oscillatory(self) -> Optional[complex]:
        """Rightmost eigenvalue with nonzero imaginary part."""
        finite = self.gep.finite
        complex_eigs = finite[np.abs(finite.imag) > 1e-9]
        if complex_eigs.size == 0:
            return None
        return complex(complex_eigs[np.argmax(complex_eigs.real)])


@dataclass(eq=False)
class SweepResult:
    points: List[SweepPoint] = field(default_factory=list)
    crossing: Optional[float] = None
    truncated_at: Optional[float] = None
    max_jump: float = 0.0

    @property
    def last_feasible(self) -> Optional[float]:
        return self.points[-1].p_ref if self.points else None

    def as_rows(self) -> List[dict]:
        rows = []
        for pt in self.points:
            for lam in pt.gep.finite:
                rows.append({"p_ref": pt.p_ref, "real": float(lam.real), "imag": float(lam.imag), "status": pt.verdict.status})
        return rows


def _analyze(case: NetworkCase, p_ref: float, point: OperatingPoint, tol: float) -> SweepPoint:
    sys = extract_ldss(case.model, point)
    gep = generalized_eig(sys)
    return SweepPoint(p_ref, point, gep, stability_verdict(gep, tol))


def bifurcation_sweep(
    case: NetworkCase,
    p_refs: Sequence[float],
    signals: Sequence[str] = ("p_ref_gfm", "p_ref_gfl"),
    threads: Optional[int] = None,
) -> SweepResult:
    """
    Continue the equilibrium along p_refs (applied to every name in signals)
    and solve the pencil at each point.

    Equilibria are found in order, each starting from the previous one; the
    sweep stops at the first grid point where no equilibrium is found. The
    eigenvalue problems run on up to threads workers (MLSTAB_THREADS).
    """
    settings = get_settings()
    threads = threads or settings.threads
    signals = [name for name in signals if name in case.model.partition]
    result = SweepResult()
    feasible = []
    previous = None
    for p_ref in p_refs:
        refs = {name: float(p_ref) for name in signals}
        try:
            previous = find_equilibrium(case, refs, guess=previous.v_bar if previous else None)
        except ConvergenceError as exc:
            result.truncated_at = float(p_ref)
            logger.warning("sweep truncated at p_ref=%g: %s", p_ref, exc)
            break
        feasible.append((float(p_ref), previous))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        jobs = [pool.submit(_analyze, case, p, pt, settings.stab_tol) for p, pt in feasible]
        result.points = [job.result() for job in jobs]

    prev_dominant = None
    for k, pt in enumerate(result.points):
        dominant = pt.dominant_oscillatory
        if k > 0:
            before = result.points[k - 1].gep.finite
            jump = eig_compare(before, pt.gep.finite).max_abs
            result.max_jump = max(result.max_jump, jump)
        if (
            result.crossing is None
            and dominant is not None
            and prev_dominant is not None
            and prev_dominant.real <= 0.0 < dominant.real
        ):
            result.crossing = pt.p_ref
        prev_dominant = dominant
    logger.info(
        "sweep over %d points: crossing=%s truncated_at=%s",
        len(result.points), result.crossing, result.truncated_at,
    )
    return result


def refine_crossing(
    case: NetworkCase,
    sweep: SweepResult,
    iterations: int = 6,
    signals: Sequence[str] = ("p_ref_gfm", "p_ref_gfl"),
) -> SweepPoint:
    """
    Bisect between the last stable grid point and the crossing until the
    bracket is 2^-iterations of the grid spacing; returns the unstable end.

    Raises:
        ValueError: the sweep has no crossing
    """
    if sweep.crossing is None:
        raise ValueError("sweep found no crossing of the imaginary axis")
    k = next(i for i, pt in enumerate(sweep.points) if pt.p_ref == sweep.crossing)
    if k == 0:
        return sweep.points[0]
    lo, hi = sweep.points[k - 1], sweep.points[k]
    tol = get_settings().stab_tol
    signals = [name for name in signals if name in case.model.partition]
    for _ in range(iterations):
        mid = 0.5 * (lo.p_ref + hi.p_ref)
        point = find_equilibrium(case, {name: mid for name in signals}, guess=lo.point.v_bar)
        trial = _analyze(case, mid, point, tol)
        dominant = trial.dominant_oscillatory
        if dominant is not None and dominant.real > 0.0:
            hi = trial
        else:
            lo = trial
    logger.info("crossing bracketed in [%.5f, %.5f]", lo.p_ref, hi.p_ref)
    return hi


def window_envelopes(values: np.ndarray, fraction: float = 0.2) -> Tuple[float, float]:
    """Peak-to-peak of the window before the final fraction of samples and of the final fraction."""
    n = values.size
    width = max(1, int(round(fraction * n)))
    last = values[n - width:]
    before = values[max(0, n - 2 * width):n - width]
    return float(np.ptp(before)) if before.size else 0.0, float(np.ptp(last))


@dataclass(eq=False)
class HopfOnset:
    p_ref: float
    dominant: Optional[complex]
    trajectory: Trajectory
    signal: str
    envelopes: Tuple[float, float]

    @property
    def sustained(self) -> bool:
        """The oscillation envelope is not contracting over the final window."""
        return self.envelopes[1] >= self.envelopes[0] > 0.0


def hopf_onset(
    case: NetworkCase,
    sweep: SweepResult,
    t_end: float = 3.0,
    kick: float = 0.01,
    signal: str = "p_gfm",
    cfg: Optional[SolverConfig] = None,
) -> HopfOnset:
    """
    Simulate just past the crossing: start at the unstable equilibrium, pulse
    p_ref_gfm by kick for 50 ms and measure the envelope of signal.
    """
    past = refine_crossing(case, sweep)
    v0 = past.point.v_bar
    base = v0["p_ref_gfm"]
    schedule = InputSchedule([
        InputEvent(t=0.05, signal="p_ref_gfm", value=base + kick),
        InputEvent(t=0.10, signal="p_ref_gfm", value=base),
    ])
    traj = simulate(case.model, v0, schedule, (0.0, t_end), cfg or SolverConfig(max_step=2e-4))
    envelopes = window_envelopes(traj.signal(signal))
    logger.info("oscillation at p_ref=%.5f: envelopes %.4g -> %.4g", past.p_ref, *envelopes)
    return HopfOnset(past.p_ref, past.dominant_oscillatory, traj, signal, envelopes)
