"""
Command line tests through run(), which returns the exit code.
Run with: python -m tests.test_cli
"""
import io
import json
import math
import sys
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

import pandas as pd

from src.bench.nonlinear import pll_equilibrium
from src.blocks import pll_block
from src.linearize import OperatingPoint, linear_model
from src.main import run
from src.simulation import consistent_init
from src.storage import codecs
from src.storage.json_storage import load_json, save_json

U = (325.2059, 22.7406)


def quiet(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run(argv)
    return code, out.getvalue(), err.getvalue()


def write_pll_point(path: Path) -> None:
    model = pll_block()
    x1 = pll_equilibrium(U)[0]
    c, s = math.cos(x1), math.sin(x1)
    guess = model.vector({"z1": c, "z2": s, "alpha1": c, "alpha2": s, "v_D": U[0], "v_Q": U[1]})
    point = consistent_init(model, guess, frozen=list(model.partition.inputs) + ["d_z1", "d_z2", "d_z3"])
    save_json(path, codecs.point_to_json(OperatingPoint(point)))


def test_block_and_linearize():
    print("Testing block, linearize and eig...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        code, _, _ = quiet(["block", "pll", "-o", str(tmp / "pll.json")])
        assert code == 0
        assert load_json(tmp / "pll.json")["partition"]["n"] == 3
        write_pll_point(tmp / "point.json")
        code, _, _ = quiet(["linearize", str(tmp / "pll.json"), str(tmp / "point.json"), "-o", str(tmp / "ldss.json")])
        assert code == 0
        code, out, _ = quiet(["--format", "json", "eig", str(tmp / "ldss.json"), "-o", str(tmp / "eigs.json")])
        assert code == 0
        doc = json.loads(out)
        assert doc["infinite_count"] == 2
        assert len(doc["finite"]) == 3
    print("✅ Block and linearize test passed")


def test_unstable_exit_code():
    print("Testing unstable exit code...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        save_json(tmp / "model.json", codecs.model_to_json(linear_model([[1.0]])))
        save_json(tmp / "point.json", {"values": {"x0": 0.0}})
        assert quiet(["linearize", str(tmp / "model.json"), str(tmp / "point.json"), "-o", str(tmp / "ldss.json")])[0] == 0
        code, out, _ = quiet(["eig", str(tmp / "ldss.json")])
        assert code == 2
        assert "unstable" in out
    print("✅ Unstable exit code test passed")


def test_simulate_decay():
    print("Testing simulate command...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        save_json(tmp / "model.json", codecs.model_to_json(linear_model([[-1.0]])))
        save_json(tmp / "init.json", {"values": {"x0": 1.0, "d_x0": -1.0}})
        code, _, _ = quiet([
            "simulate", str(tmp / "model.json"), str(tmp / "init.json"),
            "--t-end", "1.0", "--max-step", "1e-3", "-o", str(tmp / "traj.csv"),
        ])
        assert code == 0
        frame = pd.read_csv(tmp / "traj.csv")
        assert list(frame.columns) == ["time", "d_x0", "x0"]
        assert abs(frame["x0"].iloc[-1] - math.exp(-1.0)) < 1e-5
        assert abs(frame["time"].iloc[-1] - 1.0) < 1e-12
    print("✅ Simulate command test passed")


def test_usage_errors():
    print("Testing usage errors...")
    assert quiet(["eig", "/nonexistent/ldss.json"])[0] == 1
    assert quiet(["no-such-command"])[0] == 1
    assert quiet(["block", "random", "--dims", "1,2"])[0] == 1
    print("✅ Usage error test passed")


def test_not_equilibrium_reports_json():
    print("Testing numerical failure report...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        save_json(tmp / "model.json", codecs.model_to_json(linear_model([[-1.0]])))
        save_json(tmp / "point.json", {"values": {"x0": 1.0}})
        code, _, err = quiet([
            "--format", "json", "linearize", str(tmp / "model.json"), str(tmp / "point.json"),
            "-o", str(tmp / "ldss.json"),
        ])
        assert code == 4
        doc = json.loads(err.strip().splitlines()[-1])
        assert doc["error"] == "NotEquilibriumError"
        assert doc["exit_code"] == 4
        assert not (tmp / "ldss.json").exists()
    print("✅ Numerical failure report test passed")


def test_compare():
    print("Testing compare command...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        save_json(tmp / "a.json", {"finite": [[-1.0, 0.0], [-2.0, 3.0], [-2.0, -3.0]]})
        save_json(tmp / "b.json", [[-1.0002, 0.0], [-2.0, 3.0001], [-2.0, -3.0001]])
        save_json(tmp / "c.json", [[-1.5, 0.0], [-2.0, 3.0], [-2.0, -3.0]])
        assert quiet(["compare", str(tmp / "a.json"), str(tmp / "b.json")])[0] == 0
        assert quiet(["compare", str(tmp / "a.json"), str(tmp / "c.json")])[0] == 2
    print("✅ Compare command test passed")


def test_compose_command():
    print("Testing compose command...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        save_json(tmp / "a.json", codecs.model_to_json(linear_model([[-1.0]], [[1.0]], states=["x"], inputs=["u"])))
        save_json(tmp / "b.json", codecs.model_to_json(linear_model([[-2.0]], states=["y"])))
        code, _, _ = quiet(["compose", str(tmp / "a.json"), str(tmp / "b.json"), "-o", str(tmp / "ab.json")])
        assert code == 0
        model = codecs.model_from_json(load_json(tmp / "ab.json"))
        assert model.partition.states == ("x", "y")
        assert model.partition.inputs == ("u",)
    print("✅ Compose command test passed")


if __name__ == "__main__":
    print("Running command line tests...\n")
    try:
        test_block_and_linearize()
        test_unstable_exit_code()
        test_simulate_decay()
        test_usage_errors()
        test_not_equilibrium_reports_json()
        test_compare()
        test_compose_command()
        print("\n✅ All tests passed!")
    except AssertionError as e:
        print(f"\n❌ Test failed: {e}")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
