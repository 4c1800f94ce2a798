"""
Time residual and Jacobian evaluation of the 3-bus model.
Run with: python -m tests.monitor_jacobian_performance
"""
import sys
import time
from pathlib import Path
from typing import Callable, Dict

# Add project root to path
project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

from src.bench import assemble, find_equilibrium
from src.core.cpn1 import eval_residual, sparsity_report
from src.linearize import (
    extract_ldss,
    finite_difference_jacobian,
    finite_difference_operations,
    jacobian,
    jacobian_operations,
)

MIN_SPEEDUP = 10.0
from src.stability import generalized_eig


def measure(func: Callable[[], object], repeats: int) -> Dict[str, float]:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return {"avg": sum(times) / len(times), "min": min(times), "max": max(times)}


def run_performance_report(variant: str = "full", repeats: int = 100) -> bool:
    print("=" * 60)
    print("Jacobian Performance Report")
    print("=" * 60)
    case = assemble(variant=variant)
    model = case.model
    report = sparsity_report(model)
    print(f"Variant: {variant}")
    print(f"  N_v={report.n_v}  N_phi={report.n_phi}  R={report.r}")
    print(f"  phi nonzeros: {report.phi_nonzeros}  S nonzeros: {report.s_nonzeros}\n")

    start = time.perf_counter()
    point = find_equilibrium(case)
    print(f"⚖️  Equilibrium found in {(time.perf_counter() - start) * 1000:.1f} ms\n")

    print("⏱️  Evaluation times:")
    rows = {
        "residual": measure(lambda: eval_residual(model, point.values), repeats),
        "analytic jacobian": measure(lambda: jacobian(model, point), repeats),
        "finite differences": measure(lambda: finite_difference_jacobian(model, point), repeats),
        "ldss + QZ": measure(lambda: generalized_eig(extract_ldss(model, point)), max(1, repeats // 10)),
    }
    for name, stats in rows.items():
        print(f"  {name:<20} avg {stats['avg'] * 1e3:8.3f} ms  (min {stats['min'] * 1e3:.3f}, max {stats['max'] * 1e3:.3f})")
    print()
    analytic_ops = jacobian_operations(model)
    fd_ops = finite_difference_operations(model)
    print("🔢 Operation counts (nonzero entries only):")
    print(f"  analytic jacobian    {analytic_ops.total:>12,d}")
    print(f"  finite differences   {fd_ops.total:>12,d}  ({fd_ops.total / analytic_ops.total:.0f}x)\n")

    speedup = rows["finite differences"]["avg"] / rows["analytic jacobian"]["avg"]
    ok = speedup >= MIN_SPEEDUP
    if ok:
        print(f"  ✅ Analytic Jacobian is {speedup:.1f}x faster than finite differences")
    else:
        print(f"  ❌ Analytic Jacobian is only {speedup:.2f}x faster (need {MIN_SPEEDUP:g}x)")
    print()
    print("=" * 60)
    return ok


if __name__ == "__main__":
    import argparse
    parser = argparse.ArgumentParser(description="Time Jacobian evaluation")
    parser.add_argument("--variant", default="full", choices=["full", "gfm", "gfl"])
    parser.add_argument("--repeats", type=int, default=100)
    args = parser.parse_args()

    if not run_performance_report(args.variant, args.repeats):
        sys.exit(1)
