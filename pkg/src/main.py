import json
import sys
from functools import wraps
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.bench.nonlinear import NTI_STATES
from src.bench.params import NetworkParams
from src.bench.scenarios import SCENARIOS, run_scenario
from src.bench.sweep import bifurcation_sweep
from src.bench.three_bus import assemble
from src.blocks import converters, network, pll
from src.blocks.params import (
    CurrentControlParams,
    DroopParams,
    LoadParams,
    PllParams,
    PqControlParams,
    RlBranchParams,
    SrfPllParams,
    VirtualAdmittanceParams,
    VsmParams,
)
from src.core.cpn1 import compose, merge_duplicate_factors, random_model, sparsity_report
from src.core.errors import (
    DimensionError,
    MlstabError,
    ModelFormatError,
    SizeGuardError,
    UnknownSignalError,
)
from src.linearize.ldss import extract_ldss
from src.simulation.config import SolverConfig
from src.simulation.dae import consistent_init, simulate
from src.simulation.schedule import InputSchedule
from src.stability.compare import eig_compare
from src.stability.gep import GepSolution, StabilityVerdict, generalized_eig, stability_verdict
from src.storage import codecs
from src.storage.csv_storage import save_trajectory
from src.storage.json_storage import load_json, save_json
from src.utils.config import get_settings, load_config
from src.utils.logs import configure_logging

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNSTABLE = 2
EXIT_MARGINAL = 3
EXIT_NUMERICAL = 4

USAGE_ERRORS = (ModelFormatError, DimensionError, UnknownSignalError, SizeGuardError)

BLOCKS = {
    "pll": (PllParams, lambda p: pll.pll_block(p)),
    "srf-pll": (SrfPllParams, lambda p: pll.srf_pll_block(p)),
    "vsm": (VsmParams, lambda p: converters.vsm_block(p)),
    "droop": (DroopParams, lambda p: converters.droop_q_block(p)),
    "virtual-admittance": (VirtualAdmittanceParams, lambda p: converters.virtual_admittance_block(p)),
    "current-control": (CurrentControlParams, lambda p: converters.current_control_block(p)),
    "pq-control": (PqControlParams, lambda p: converters.pq_control_block(p)),
    "rl-branch": (RlBranchParams, lambda p: network.rl_branch_block(p, node_l=("v_bus_D", "v_bus_Q"))),
    "load": (LoadParams, lambda p: network.resistive_load_block(p, [("i_D", "i_Q")])),
}


def _emit_error(fmt: str, kind: str, message: str, code: int) -> int:
    if fmt == "json":
        click.echo(json.dumps({"error": kind, "message": message, "exit_code": code}), err=True)
    else:
        click.echo(f"Error: {message}", err=True)
    return code


def handles_errors(func: Callable) -> Callable:
    """Turn library failures into exit codes; numerical failures give 4, bad input 1."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        fmt = click.get_current_context().find_root().obj.get("format", "table")
        try:
            return func(*args, **kwargs)
        except USAGE_ERRORS as exc:
            return _emit_error(fmt, type(exc).__name__, str(exc), EXIT_USAGE)
        except MlstabError as exc:
            return _emit_error(fmt, type(exc).__name__, str(exc), EXIT_NUMERICAL)
        except (ValidationError, FileNotFoundError, ValueError) as exc:
            return _emit_error(fmt, type(exc).__name__, str(exc), EXIT_USAGE)

    return wrapper


def _fmt() -> str:
    return click.get_current_context().find_root().obj.get("format", "table")


def _load_model(path: str):
    return codecs.model_from_json(load_json(path))


def _eig_table(sol: GepSolution, verdict: StabilityVerdict, tol: float) -> pd.DataFrame:
    rows = []
    for lam in sorted(sol.finite, key=lambda x: (x.real, x.imag)):
        mag = abs(lam)
        if mag <= tol:
            kind = "zero"
        elif lam.real > tol:
            kind = "unstable"
        elif abs(lam.real) <= tol:
            kind = "marginal"
        else:
            kind = "stable"
        damping = -lam.real / mag if mag > 0 else float("nan")
        rows.append({"real": lam.real, "imag": lam.imag, "abs": mag, "damping": damping, "class": kind})
    for _ in range(sol.infinite_count):
        rows.append({"real": float("inf"), "imag": 0.0, "abs": float("inf"), "damping": float("nan"), "class": "infinite"})
    return pd.DataFrame(rows, columns=["real", "imag", "abs", "damping", "class"])


def _verdict_code(verdict: StabilityVerdict) -> int:
    if not verdict.stable:
        return EXIT_UNSTABLE
    return EXIT_MARGINAL if verdict.marginal else EXIT_OK


@click.group()
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table", help="Output format")
@click.option("--log-level", default=None, help="Overrides MLSTAB_LOG_LEVEL")
@click.pass_context
def cli(ctx: click.Context, fmt: str, log_level: Optional[str]):
    """Multilinear modeling and small-signal stability of power systems."""
    load_config()
    configure_logging(log_level or get_settings().log_level)
    ctx.ensure_object(dict)
    ctx.obj["format"] = fmt


@cli.command("block")
@click.argument("name", type=click.Choice(sorted(BLOCKS) + ["random"]))
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), help="Parameter JSON")
@click.option("--seed", type=int, default=None, help="Seed for the random model")
@click.option("--dims", default="2,1,1,1,6", show_default=True, help="n,m,p,q,R of the random model")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Model file to write")
@handles_errors
def cmd_block(name: str, params_path: Optional[str], seed: Optional[int], dims: str, output: Optional[str]):
    """Build one library block (or a random model) as a model file."""
    if name == "random":
        n, m, p, q, r = (int(x) for x in dims.split(","))
        model = random_model(n, m, p, q, r, np.random.default_rng(seed))
    else:
        params_cls, build = BLOCKS[name]
        params = params_cls.model_validate(load_json(params_path)) if params_path else params_cls()
        model = build(params)
    doc = codecs.model_to_json(model)
    if output:
        save_json(output, doc)
        report = sparsity_report(model).as_dict()
        report.pop("factor_degrees")
        click.echo(json.dumps(report) if _fmt() == "json" else f"wrote {output}: {report}")
    else:
        click.echo(json.dumps(doc, indent=2))
    return EXIT_OK


@cli.command("compose")
@click.argument("models", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--link", "links", multiple=True, help="source:target, adds 0 = source - target")
@click.option("--input", "inputs", multiple=True, help="Input to place first (repeatable)")
@click.option("--merge/--no-merge", default=False, help="Merge identical factor columns")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@handles_errors
def cmd_compose(models: Sequence[str], links: Sequence[str], inputs: Sequence[str], merge: bool, output: str):
    """Stack model files into one composite model."""
    pairs = []
    for link in links:
        if ":" not in link:
            raise click.UsageError(f"link '{link}' must be source:target")
        source, target = link.split(":", 1)
        pairs.append((source, target))
    model = compose([_load_model(path) for path in models], links=pairs, inputs=inputs)
    if merge:
        model = merge_duplicate_factors(model)
    save_json(output, codecs.model_to_json(model))
    report = sparsity_report(model).as_dict()
    report.pop("factor_degrees")
    click.echo(json.dumps(report) if _fmt() == "json" else f"wrote {output}: {report}")
    return EXIT_OK


@cli.command("simulate")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("init_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("schedule_path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--t-start", type=float, default=0.0, show_default=True)
@click.option("--t-end", type=float, required=True)
@click.option("--max-step", type=float, default=None)
@click.option("--method", type=click.Choice(["trapezoidal", "implicit-euler"]), default="trapezoidal")
@click.option("--project/--no-project", default=True, help="Project lifts back onto the unit circle")
@click.option("--solve-init", is_flag=True, help="Make the initial point consistent first (inputs frozen)")
@click.option("--layout", type=click.Choice(["wide", "long"]), default="wide")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@handles_errors
def cmd_simulate(
    model_path: str,
    init_path: str,
    schedule_path: Optional[str],
    t_start: float,
    t_end: float,
    max_step: Optional[float],
    method: str,
    project: bool,
    solve_init: bool,
    layout: str,
    output: str,
):
    """Integrate a model from an initial point and write the trajectory CSV."""
    model = _load_model(model_path)
    v0 = codecs.point_from_json(load_json(init_path), model.partition).v_bar
    schedule = InputSchedule.from_json(load_json(schedule_path)) if schedule_path else InputSchedule()
    cfg_args = {"method": method, "project_lifts": project}
    if max_step is not None:
        cfg_args["max_step"] = max_step
    cfg = SolverConfig(**cfg_args)
    if solve_init:
        v0 = consistent_init(model, v0, frozen=model.partition.inputs)
    traj = simulate(model, v0, schedule, (t_start, t_end), cfg)
    save_trajectory(output, traj, layout=layout)
    stats = dict(traj.solver_stats, samples=len(traj))
    click.echo(json.dumps(stats) if _fmt() == "json" else f"wrote {output}: {stats}")
    return EXIT_OK


@cli.command("linearize")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("point_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--affine", is_flag=True, help="Keep the residual as forcing instead of requiring an equilibrium")
@click.option("--tol", type=float, default=None, help="Equilibrium tolerance")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@handles_errors
def cmd_linearize(model_path: str, point_path: str, affine: bool, tol: Optional[float], output: str):
    """Extract the descriptor system (E, A, B) around an operating point."""
    model = _load_model(model_path)
    point = codecs.point_from_json(load_json(point_path), model.partition)
    sys_ = extract_ldss(model, point, tol=tol, require_equilibrium=not affine)
    save_json(output, codecs.ldss_to_json(sys_))
    summary = {"dim": sys_.dim, "inputs": len(sys_.inputs), "rank_e": sys_.rank_e()}
    click.echo(json.dumps(summary) if _fmt() == "json" else f"wrote {output}: {summary}")
    return EXIT_OK


@cli.command("eig")
@click.argument("ldss_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=None, help="Stability and zero tolerance")
@click.option("--inf-tol", type=float, default=None, help="Infinite-eigenvalue threshold")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="eigs.json to write")
@handles_errors
def cmd_eig(ldss_path: str, tol: Optional[float], inf_tol: Optional[float], output: Optional[str]):
    """Generalized eigenvalues and stability verdict; exit 2 unstable, 3 marginal."""
    sys_ = codecs.ldss_from_json(load_json(ldss_path))
    tol = get_settings().stab_tol if tol is None else tol
    sol = generalized_eig(sys_, inf_tol=inf_tol)
    verdict = stability_verdict(sol, tol)
    doc = codecs.eigs_to_json(sol, verdict)
    if output:
        save_json(output, doc)
    fmt = _fmt()
    if fmt == "json":
        click.echo(json.dumps(doc))
    elif fmt == "csv":
        click.echo(_eig_table(sol, verdict, tol).to_csv(index=False), nl=False)
    else:
        click.echo(_eig_table(sol, verdict, tol).to_string(index=False))
        click.echo(f"verdict: {verdict.status} (zero eigenvalues: {verdict.zero_eigs})")
    return _verdict_code(verdict)


@cli.command("compare")
@click.argument("first", type=click.Path(exists=True, dir_okay=False))
@click.argument("second", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-3, show_default=True, help="Relative pairing tolerance")
@click.option("--drop-zeros", is_flag=True, help="Ignore eigenvalues with |lambda| <= MLSTAB_STAB_TOL")
@handles_errors
def cmd_compare(first: str, second: str, tol: float, drop_zeros: bool):
    """Pair two eigenvalue sets; exit 2 when some pair is farther apart than tol."""
    a = codecs.eigs_from_json(load_json(first))
    b = codecs.eigs_from_json(load_json(second))
    if drop_zeros:
        zero_tol = get_settings().stab_tol
        a, b = a[np.abs(a) > zero_tol], b[np.abs(b) > zero_tol]
    match = eig_compare(a, b, tol)
    if _fmt() == "json":
        click.echo(json.dumps(match.as_dict()))
    else:
        frame = pd.DataFrame(
            [{"a": str(p.a), "b": str(p.b), "abs": p.abs_dist, "rel": p.rel_dist} for p in match.pairs]
        )
        click.echo(frame.to_string(index=False) if len(frame) else "no pairs")
        click.echo(f"max relative distance {match.max_rel:.3e}; unmatched {len(match.unmatched_a)}/{len(match.unmatched_b)}")
    return EXIT_OK if match.within_tol else EXIT_UNSTABLE


def _network_params(path: Optional[str]) -> NetworkParams:
    return NetworkParams.model_validate(load_json(path)) if path else NetworkParams()


@cli.command("bench")
@click.argument("case", type=click.Choice(["3bus"]))
@click.option("--scenario", type=click.Choice(sorted(SCENARIOS)), default="small-step", show_default=True)
@click.option("--variant", type=click.Choice(["full", "gfm", "gfl"]), default="full", show_default=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), help="NetworkParams JSON")
@click.option("--compare/--no-compare", default=True, help="Also run the linear and nonlinear references")
@click.option("-o", "--output", type=click.Path(file_okay=False), default=None, help="Output directory")
@handles_errors
def cmd_bench(case: str, scenario: str, variant: str, params_path: Optional[str], compare: bool, output: Optional[str]):
    """Run a benchmark scenario and write trajectories, LDSS, eigenvalues and a report."""
    outdir = Path(output) if output else get_settings().data_dir / f"{case}-{scenario}"
    network_case = assemble(_network_params(params_path), variant)
    result = run_scenario(network_case, scenario, compare=compare)
    outdir.mkdir(parents=True, exist_ok=True)
    save_trajectory(outdir / "traj_imti.csv", result.trajectory)
    if result.linear_trajectory is not None:
        save_trajectory(outdir / "traj_ldss.csv", result.linear_trajectory)
    if result.nonlinear is not None:
        frame = pd.DataFrame(result.nonlinear.states, columns=list(NTI_STATES))
        frame.insert(0, "time", result.nonlinear.times)
        frame.to_csv(outdir / "traj_nti.csv", index=False, float_format="%.12g")
    save_json(outdir / "ldss.json", codecs.ldss_to_json(result.ldss))
    save_json(outdir / "eigs.json", codecs.eigs_to_json(result.gep, result.verdict))
    report = result.report()
    save_json(outdir / "report.json", report)
    lines = [f"{key:>14}: {value}" for key, value in report.items() if key not in ("max_deviation", "eig_match")]
    for model, devs in report["max_deviation"].items():
        for name, dev in devs.items():
            lines.append(f"{model + ' ' + name:>24}: {dev:.3e}")
    (outdir / "report.txt").write_text("\n".join(lines) + "\n")
    click.echo(json.dumps(report) if _fmt() == "json" else "\n".join(lines))
    return EXIT_OK


@cli.command("sweep")
@click.option("--start", type=float, default=0.2, show_default=True)
@click.option("--stop", type=float, default=1.0, show_default=True)
@click.option("--points", type=int, default=9, show_default=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), help="NetworkParams JSON")
@click.option("-o", "--output", type=click.Path(file_okay=False), default=None, help="Output directory")
@handles_errors
def cmd_sweep(start: float, stop: float, points: int, params_path: Optional[str], output: Optional[str]):
    """Equilibria and eigenvalues along a grid of active power references."""
    if points < 1:
        raise click.UsageError("--points must be at least 1")
    outdir = Path(output) if output else get_settings().data_dir / "sweep"
    case = assemble(_network_params(params_path))
    result = bifurcation_sweep(case, np.linspace(start, stop, points))
    outdir.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(result.as_rows()).to_csv(outdir / "sweep_eigs.csv", index=False, float_format="%.12g")
    summary = {
        "points": len(result.points),
        "crossing": result.crossing,
        "truncated_at": result.truncated_at,
        "last_feasible": result.last_feasible,
        "max_jump": result.max_jump,
        "status": [pt.verdict.status for pt in result.points],
    }
    save_json(outdir / "sweep.json", summary)
    click.echo(json.dumps(summary) if _fmt() == "json" else "\n".join(f"{k}: {v}" for k, v in summary.items()))
    return EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        result = cli.main(args=argv, prog_name="mlstab", standalone_mode=False, obj={})
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
