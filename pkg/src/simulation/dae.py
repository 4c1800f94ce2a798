"""
Implicit time stepping of iMTI models.

Each step solves h(dz, z, u, y, alpha) = 0 at the new time for (z, y, alpha),
with dz replaced by the divided difference of the chosen one-step rule:
    implicit Euler  dz1 = (z1 - z0) / dt
    trapezoidal     dz1 = 2 (z1 - z0) / dt - dz0
The first step after an event always uses implicit Euler, since dz0 jumps there.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.core.cpn1 import (
    as_values,
    eval_factors,
    lift_residuals,
    project_lifts,
    residual_norm,
)
from src.core.errors import ConvergenceError, DimensionError, ModelFormatError, StepSizeError
from src.core.types import Cpn1Model, SignalPartition, SignalVector
from src.linearize.jacobian import jacobian_matrix
from src.simulation.config import SolverConfig
from src.simulation.schedule import InputSchedule
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

_TIME_EPS = 1e-12


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    samples: np.ndarray
    drift: np.ndarray
    partition: SignalPartition
    solver_stats: Dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.times.size

    def signal(self, name: str) -> np.ndarray:
        return self.samples[:, self.partition.index(name)]

    def sample(self, k: int) -> SignalVector:
        return SignalVector(self.samples[k], self.partition)

    @property
    def final(self) -> SignalVector:
        return self.sample(-1)

    def at(self, t: float) -> SignalVector:
        """Last recorded sample at or before t."""
        k = int(np.searchsorted(self.times, t + _TIME_EPS, side="right")) - 1
        return self.sample(max(k, 0))

    def window(self, t0: float, t1: float) -> "Trajectory":
        mask = (self.times >= t0 - _TIME_EPS) & (self.times <= t1 + _TIME_EPS)
        return Trajectory(
            self.times[mask], self.samples[mask], self.drift[mask], self.partition, dict(self.solver_stats)
        )


def _terms(model: Cpn1Model, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    terms = model.phi * eval_factors(model, values)[None, :]
    residual = terms.sum(axis=1)
    scale = np.maximum(1.0, np.abs(terms).sum(axis=1))
    return residual, scale


def _lift_pairs(model: Cpn1Model) -> List[Tuple[int, int]]:
    part = model.partition
    return [(part.index(c), part.index(s)) for c, s in model.lifts]


def _deficient_rows(matrix: np.ndarray, labels: Sequence[str]) -> List[str]:
    if matrix.size == 0:
        return []
    _, r, perm = linalg.qr(matrix.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return [labels[i] for i in perm]
    rank = int(np.sum(diag > 1e-10 * diag[0]))
    if rank >= matrix.shape[1]:
        return []
    return [labels[i] for i in perm[rank:]]


def consistent_init(
    model: Cpn1Model,
    guess,
    frozen: Iterable[str] = (),
    tol: Optional[float] = None,
    max_iters: int = 50,
    project: bool = True,
) -> SignalVector:
    """
    Solve h(v) = 0 together with the lift constraints over the non-frozen signals.

    Gauss-Newton with least-squares steps on row-scaled equations and a
    backtracking line search. Lifts whose states are free are projected onto the
    unit circle first.

    Raises:
        ConvergenceError: residual still above tol after max_iters; carries the
            residual norm and, for a rank-deficient iteration matrix, the
            dependent equations
    """
    part = model.partition
    tol = SolverConfig().newton_tol if tol is None else tol
    v = np.array(as_values(model, guess), dtype=float)
    frozen_idx = {part.index(name) for name in frozen}
    free = np.array([i for i in range(part.n_v) if i not in frozen_idx], dtype=int)
    position = {int(i): k for k, i in enumerate(free)}
    pairs = [(c, s) for c, s in _lift_pairs(model) if c in position and s in position]
    if project and pairs:
        projected = project_lifts(model, v)
        for c, s in pairs:
            v[c], v[s] = projected[c], projected[s]
    labels = list(model.equations) + [f"lift {part.names[c]}/{part.names[s]}" for c, s in pairs]

    def merit(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        residual, scale = _terms(model, values)
        g = np.array([values[c] ** 2 + values[s] ** 2 - 1.0 for c, s in pairs])
        return np.concatenate([residual / scale, g]), scale

    rhs, scale = merit(v)
    norm = float(np.max(np.abs(rhs), initial=0.0))
    matrix = np.zeros((rhs.size, free.size))
    for it in range(max_iters + 1):
        if norm <= tol:
            logger.debug("consistent point after %d iterations (|h| = %.2e)", it, norm)
            return SignalVector(v, part)
        if it == max_iters or free.size == 0:
            break
        j = jacobian_matrix(model, v)[:, free] / scale[:, None]
        lift_rows = np.zeros((len(pairs), free.size))
        for k, (c, s) in enumerate(pairs):
            lift_rows[k, position[c]] = 2.0 * v[c]
            lift_rows[k, position[s]] = 2.0 * v[s]
        matrix = np.vstack([j, lift_rows])
        # columns scaled by signal magnitude; voltages and currents span ~1e7
        col = np.maximum(1.0, np.abs(v[free]))
        step, *_ = linalg.lstsq(matrix * col[None, :], -rhs)
        step *= col
        alpha = 1.0
        for _ in range(12):
            trial = v.copy()
            trial[free] += alpha * step
            trial_rhs, trial_scale = merit(trial)
            trial_norm = float(np.max(np.abs(trial_rhs), initial=0.0))
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            alpha *= 0.5
        v, rhs, scale, norm = trial, trial_rhs, trial_scale, trial_norm

    deficient = _deficient_rows(matrix, labels) if matrix.size else []
    logger.warning("consistent initialization stalled at |h| = %.3e", norm)
    raise ConvergenceError(
        f"consistent initialization did not converge in {max_iters} iterations "
        f"(|h| = {norm:.3e})",
        norm,
        deficient,
    )


class _NewtonFailure(Exception):
    pass


class DaeStepper:
    """One model, one rule; solves single steps of the implicit residual."""

    def __init__(self, model: Cpn1Model, cfg: SolverConfig):
        self.cfg = cfg
        part = model.partition
        self.part = part
        self.deriv = np.arange(part.n)
        self.state = np.arange(part.n, 2 * part.n)
        self.inputs = np.arange(2 * part.n, 2 * part.n + part.m)
        self.rest = np.arange(2 * part.n + part.m, part.n_v)
        self.newton_iters = 0
        self.max_newton = 0

    def step(
        self,
        model: Cpn1Model,
        v0: np.ndarray,
        dt: float,
        inputs: np.ndarray,
        method: str,
    ) -> np.ndarray:
        cfg = self.cfg
        n = self.part.n
        c = 2.0 / dt if method == "trapezoidal" else 1.0 / dt
        z0 = v0[self.state]
        carry = v0[self.deriv] if method == "trapezoidal" else np.zeros(n)

        v = v0.copy()
        v[self.inputs] = inputs
        v[self.state] = z0 + dt * v0[self.deriv]
        v[self.deriv] = c * (v[self.state] - z0) - carry

        for it in range(cfg.newton_max_iters + 1):
            residual, scale = _terms(model, v)
            norm = float(np.max(np.abs(residual / scale), initial=0.0))
            if not np.isfinite(norm):
                raise _NewtonFailure("non-finite residual")
            if norm <= cfg.newton_tol:
                self.newton_iters += it
                self.max_newton = max(self.max_newton, it)
                return v
            if it == cfg.newton_max_iters:
                break
            j = jacobian_matrix(model, v)
            m = np.empty((model.n_eq, n + self.rest.size))
            m[:, :n] = j[:, self.state] + c * j[:, self.deriv]
            m[:, n:] = j[:, self.rest]
            try:
                delta = linalg.solve(m / scale[:, None], -residual / scale)
            except (linalg.LinAlgError, ValueError) as exc:
                raise _NewtonFailure(str(exc)) from exc
            v[self.state] += delta[:n]
            v[self.rest] += delta[n:]
            v[self.deriv] = c * (v[self.state] - z0) - carry
            unknown = np.concatenate([v[self.state], v[self.rest]])
            weight = cfg.abs_tol + cfg.rel_tol * np.abs(unknown)
            if np.max(np.abs(delta) / weight) <= 1e-6:
                residual, scale = _terms(model, v)
                if np.max(np.abs(residual / scale)) <= np.sqrt(cfg.newton_tol):
                    self.newton_iters += it + 1
                    self.max_newton = max(self.max_newton, it + 1)
                    return v
        raise _NewtonFailure(f"Newton did not converge (|h| = {norm:.3e})")


def simulate(
    model: Cpn1Model,
    v0,
    schedule: Optional[InputSchedule] = None,
    t_span: Tuple[float, float] = (0.0, 1.0),
    cfg: Optional[SolverConfig] = None,
    init_tol: Optional[float] = None,
) -> Trajectory:
    """
    Integrate from a consistent point v0 over t_span.

    Step boundaries fall exactly on every scheduled event. A failed Newton solve
    halves the step; below cfg.min_step the run aborts.

    Raises:
        DimensionError: the model is not square in (z, y, alpha)
        ModelFormatError: v0 is not consistent
        StepSizeError: the step size underflowed; carries the partial trajectory
    """
    cfg = cfg or SolverConfig()
    schedule = schedule or InputSchedule()
    part = model.partition
    if not model.is_square:
        raise DimensionError(
            f"can only simulate square models: {model.n_eq} equations for "
            f"{part.n + part.p + part.q} unknowns"
        )
    schedule.validate_for(model)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ModelFormatError(f"empty time span ({t0}, {t1})")

    v = np.array(as_values(model, v0), dtype=float)
    init_tol = get_settings().eq_tol if init_tol is None else init_tol
    start_norm = residual_norm(schedule.model_at(t0, model), v)
    if start_norm > init_tol:
        raise ModelFormatError(
            f"initial point is inconsistent (|h| = {start_norm:.3e}); run consistent_init first"
        )
    base_inputs = v[part.input_slice].copy()

    stepper = DaeStepper(model, cfg)
    boundaries = schedule.event_times(t0, t1)
    event_set = [t for t in boundaries if t > t0]
    stops = event_set + [t1]
    pairs = _lift_pairs(model)

    times: List[float] = [t0]
    samples: List[np.ndarray] = [v.copy()]
    drift: List[float] = [float(np.max(np.abs(lift_residuals(model, v)), initial=0.0))]
    stats = {"steps": 0, "rejected": 0, "newton_iters": 0, "max_newton_iters": 0}

    def partial() -> Trajectory:
        stats["newton_iters"] = stepper.newton_iters
        stats["max_newton_iters"] = stepper.max_newton
        return Trajectory(np.array(times), np.array(samples), np.array(drift), part, dict(stats))

    t = t0
    dt = cfg.max_step
    after_event = t0 in boundaries
    stop_k = 0
    while t < t1 - _TIME_EPS:
        while stops[stop_k] <= t + _TIME_EPS:
            stop_k += 1
        target = stops[stop_k]
        h = min(dt, target - t)
        if target - (t + h) < _TIME_EPS * max(1.0, abs(target)):
            h = target - t
            t_next = target
        else:
            t_next = t + h
        active = schedule.model_at(t_next, model)
        inputs = schedule.inputs_at(t_next, part, base_inputs)
        method = "implicit-euler" if after_event else cfg.method
        try:
            v_next = stepper.step(active, v, h, inputs, method)
        except _NewtonFailure as exc:
            stats["rejected"] += 1
            dt = h / 2.0
            logger.warning("step rejected at t=%.6g (dt=%.3g): %s", t, h, exc)
            if dt < cfg.min_step:
                raise StepSizeError(
                    f"step size underflow at t={t:.6g}: dt={dt:.3g} < {cfg.min_step:.3g}",
                    partial(),
                ) from None
            continue
        if cfg.project_lifts and pairs:
            v_next = project_lifts(model, v_next)
        v, t = v_next, t_next
        stats["steps"] += 1
        landed = t_next == target and target in event_set
        after_event = landed
        dt = min(cfg.max_step, 2.0 * dt)
        if landed or t >= t1 - _TIME_EPS or stats["steps"] % cfg.record_every == 0:
            times.append(t)
            samples.append(v.copy())
            drift.append(float(np.max(np.abs(lift_residuals(model, v)), initial=0.0)))
    logger.debug("simulated %d steps, %d rejected", stats["steps"], stats["rejected"])
    return partial()


def drift_metric(traj: Trajectory) -> float:
    """Largest unit-circle violation over all recorded samples."""
    return float(np.max(np.abs(traj.drift), initial=0.0))
