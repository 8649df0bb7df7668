import io
import json
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hetroute import cli
from hetroute.gamefile import format_flows, load_game
from hetroute.equilibrium import solve_equilibrium

DATA = Path(__file__).resolve().parents[1] / "src" / "hetroute" / "data"
FIG = str(DATA / "fig1.game")
PLATOON = str(DATA / "platoon.game")


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv, "--format", "json")
    return code, json.loads(text)


def test_check_exit_codes():
    assert run_json("check", "--game", FIG)[0] == 0
    code, payload = run_json("check", "--game", PLATOON)
    assert code == 1 and payload["symmetry"]["verdict"] == "Asymmetric"
    assert payload["symmetry"]["failing_edges"] == [0, 1, 2]


def test_check_text_output():
    code, text = run("check", "--game", PLATOON, "--mode", "edgewise")
    assert code == 1 and text.startswith("verdict: Asymmetric (mode edgewise")


def test_solve_and_verify_round_trip(tmp_path):
    flows_path = tmp_path / "eq.csv"
    trace_path = tmp_path / "trace.csv"
    code, payload = run_json("solve", "--game", FIG, "--gap-tol", "1e-12",
                             "--flows-out", str(flows_path), "--trace", str(trace_path))
    assert code == 0 and payload["converged"]
    assert payload["certificate"]["epsilon"] <= 1e-3
    assert trace_path.read_text().startswith("iter,V,gap\n")
    code, payload = run_json("verify", "--game", FIG, "--flows", str(flows_path))
    assert code == 0 and payload["passed"]


def test_verify_detects_bad_flows(tmp_path):
    game = load_game(FIG)
    f = solve_equilibrium(game).flows
    f[0, 0] -= 0.5
    f[1, 0] += 0.5
    path = tmp_path / "bad.csv"
    path.write_text(format_flows(f))
    code, text = run("verify", "--game", FIG, "--flows", str(path))
    assert code == 1 and "used path 1" in text
    f[0, 0] += 3.0
    path.write_text(format_flows(f))
    code, payload = run_json("verify", "--game", FIG, "--flows", str(path))
    assert code == 1 and payload["error"] == "InfeasibleFlows"


def test_solve_refuses_asymmetric():
    code, payload = run_json("solve", "--game", PLATOON)
    assert code == 1 and payload["error"] == "NoPotential"


@pytest.mark.parametrize("scheme", ["charge_type1", "charge_type2", "indistinguishable"])
def test_tolls_then_solve(tmp_path, scheme):
    out = tmp_path / "tolled.game"
    code, payload = run_json("tolls", "--game", PLATOON, "--scheme", scheme, "--write", str(out))
    assert code == 0 and payload["condition"]["passed"]
    assert payload["post_toll"]["verdict"] == "EdgewiseSymmetric"
    assert run_json("check", "--game", str(out))[0] == 0
    assert run_json("solve", "--game", str(out))[0] == 0


def test_nonnegative_tolls():
    code, payload = run_json("tolls", "--game", PLATOON, "--scheme", "charge_type1", "--nonnegative-tolls")
    assert code == 0 and payload["scheme"].endswith("+shift")
    assert all(min(e["const"]) >= 0 for e in payload["edges"])


def test_opt_and_poa():
    code, payload = run_json("opt", "--game", FIG)
    assert code == 0 and payload["converged"]
    code, payload = run_json("poa", "--game", FIG)
    assert code == 0 and abs(payload["ratio"] - 1.0137) <= 0.005
    assert payload["bound_applicable"] and payload["bound_value"] == 2.0
    code, text = run("poa", "--game", str(DATA / "zero_demand.game"))
    assert code == 0 and re.search(r"0/0 convention used\s+True", text)


def test_zero_demand_verify():
    code, payload = run_json("verify", "--game", str(DATA / "zero_demand.game"), "--flows", str(DATA / "zero.csv"))
    assert code == 0 and payload["certificate"]["epsilon"] == 0.0


def test_json_is_deterministic(tmp_path):
    a = run("poa", "--game", FIG, "--format", "json")[1]
    b = run("poa", "--game", FIG, "--format", "json")[1]
    assert a == b
    side = tmp_path / "r.json"
    text = run("check", "--game", FIG, "--json-out", str(side))[1]
    assert not text.lstrip().startswith("{")
    assert json.loads(side.read_text())["symmetry"]["verdict"] == "EdgewiseSymmetric"


def test_input_errors(tmp_path):
    assert run("check", "--game", str(tmp_path / "missing.game"))[0] == 2
    bad = tmp_path / "bad.game"
    bad.write_text("hetroute-game/1\nvertices 0 1\nedge 0 0 1 affine alpha=1 beta=0,0\n")
    assert run("check", "--game", str(bad))[0] == 2
    assert run("solve", "--game", FIG, "--gap-tol", "-1")[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("verify", "--game", FIG, "--flows", str(bad))[0] == 2


def test_solver_flags_reach_the_solver():
    code, payload = run_json("solve", "--game", FIG, "--variant", "classic", "--max-iters", "5")
    assert code == 0 and payload["iterations"] <= 5 and not payload["converged"]


def test_repro():
    code, payload = run_json("repro-paper")
    assert code == 0 and all(payload["checks"].values())
    assert payload["max_cost_error"] <= 0.05


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "hetroute.cli", "check", "--game", FIG],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "EdgewiseSymmetric" in proc.stdout
    assert np.isfinite(json.loads(subprocess.run(
        [sys.executable, "-m", "hetroute.cli", "poa", "--game", FIG, "--format", "json"],
        capture_output=True, text=True).stdout)["ratio"])
