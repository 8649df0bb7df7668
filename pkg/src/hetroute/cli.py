"""Command line interface: ``hetroute <subcommand> --game FILE``.

Exit codes: 0 success, 1 a check or verification failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import reference
from .costs import validate_assumption1
from .efficiency import price_of_anarchy, social_cost, solve_social_optimum, theorem3_applicable
from .equilibrium import SolveOptions, solve_equilibrium, verify_nash
from .errors import HetrouteError, InfeasibleFlows, NoPotential, NotAffine
from .gamefile import format_flows, format_trace, load_flows, load_game, write_game
from .potential import check_potential_exists
from .tolls import apply_tolls, construct_tolls, shift_nonnegative, verify_toll_condition

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers

def _clean(obj):
    """Make ``obj`` JSON-serialisable; NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if math.isnan(x) or math.isinf(x) else x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _num(x):
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def table(headers, rows):
    cells = [[str(h) for h in headers]] + [[_num(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


class Emitter:
    def __init__(self, args, out):
        self.json = args.format == "json"
        self.out = out
        self.json_path = args.json_out

    def emit(self, payload, text):
        dumped = json.dumps(_clean(payload), sort_keys=True, indent=2)
        if self.json_path:
            with open(self.json_path, "w") as fh:
                fh.write(dumped + "\n")
        self.out.write((dumped if self.json else text) + "\n")


# ---------------------------------------------------------------------------
# shared pieces

def _options(args, game):
    base = dict(game.options)
    kw = {}
    for key in ("max_iters", "gap_tol", "step_rule", "seed", "variant"):
        val = getattr(args, key, None)
        if val is None:
            val = base.get(key)
        if val is not None:
            kw[key] = val
    try:
        return SolveOptions(**kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _path_rows(game, flows, costs):
    rows = []
    for p, path in enumerate(game.paths.paths):
        k = int(game.paths.commodity_of[p])
        rows.append([p, k, " ".join(f"e{e}" for e in path) or "-", flows[p, 0], flows[p, 1],
                     costs[p, 0], costs[p, 1]])
    return rows


def _path_headers(game):
    t1, t2 = game.type_names
    return ["path", "commodity", "edges", f"flow_{t1}", f"flow_{t2}", f"cost_{t1}", f"cost_{t2}"]


def _path_payload(game, flows, costs):
    return [{"path": p, "commodity": int(game.paths.commodity_of[p]), "edges": list(path),
             "flow": flows[p].tolist(), "cost": costs[p].tolist()}
            for p, path in enumerate(game.paths.paths)]


def _certificate_payload(cert):
    return {
        "epsilon": cert.epsilon,
        "worst": None if cert.worst is None else dict(zip(
            ("commodity", "type", "used_path", "better_path", "gap"), cert.worst)),
        "blocks": [dict(zip(("commodity", "type", "min_used", "max_used", "min_any"), b)) for b in cert.blocks],
        "used_flow_threshold": cert.used_flow_threshold,
        "stationary_only": cert.stationary_only,
    }


def _symmetry_payload(report):
    return {
        "verdict": report.verdict.value,
        "mode": report.mode,
        "symbolic": report.symbolic,
        "tol": report.tol,
        "max_residual": report.max_residual,
        "max_pair_sum": report.max_pair_sum,
        "edge_residuals": report.edge_residuals,
        "failing_edges": report.failing_edges(),
    }


def _load(args):
    try:
        return load_game(args.game, allow_unchecked=getattr(args, "allow_unchecked", False))
    except (OSError, HetrouteError, ValueError) as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_check(args, em):
    game = _load(args)
    report = check_potential_exists(game, mode=args.mode)
    assumptions = [validate_assumption1(c) for c in game.effective_costs]
    bad = [e for e, r in enumerate(assumptions) if not r.ok]
    payload = {"symmetry": _symmetry_payload(report), "assumption_violations": bad}
    rows = [[e, r, "yes" if abs(r) <= report.tol else "no"]
            for e, r in enumerate(report.edge_residuals)]
    text = "\n".join([
        f"verdict: {report.verdict.value} (mode {report.mode}, tol {report.tol:.3g})",
        f"max edge residual: {report.max_residual:.6g}; max path-pair sum: {report.max_pair_sum:.6g}",
        f"cost assumption violations on edges: {bad or 'none'}",
        table(["edge", "|residual|", "symmetric"], rows),
    ])
    em.emit(payload, text)
    return EXIT_OK if report.has_potential and not bad else EXIT_FAIL


def cmd_solve(args, em):
    game = _load(args)
    opts = _options(args, game)
    try:
        res = solve_equilibrium(game, opts)
    except NoPotential as exc:
        em.emit({"error": "NoPotential", "message": str(exc)}, f"no potential: {exc}")
        return EXIT_FAIL
    costs = game.path_costs(res.flows)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(format_trace(res.trace))
    if args.flows_out:
        with open(args.flows_out, "w") as fh:
            fh.write(format_flows(res.flows))
    payload = {
        "converged": res.converged, "gap": res.gap, "potential": res.value,
        "iterations": res.iterations, "certificate": _certificate_payload(res.certificate),
        "paths": _path_payload(game, res.flows, costs),
    }
    text = "\n".join([
        f"converged: {res.converged}  iterations: {res.iterations}  gap: {res.gap:.6g}  V: {res.value:.6g}",
        f"epsilon: {res.certificate.epsilon:.6g}" + ("  (stationary only)" if res.stationary_only else ""),
        table(_path_headers(game), _path_rows(game, res.flows, costs)),
    ])
    em.emit(payload, text)
    return EXIT_OK


def cmd_opt(args, em):
    game = _load(args)
    opts = _options(args, game)
    res = solve_social_optimum(game, opts, include_tolls=args.include_tolls)
    costs = game.path_costs(res.flows, tolled=args.include_tolls)
    c = social_cost(game, res.flows, args.include_tolls)
    payload = {"social_cost": c, "gap": res.gap, "converged": res.converged,
               "stationary_only": res.stationary_only, "paths": _path_payload(game, res.flows, costs)}
    text = "\n".join([
        f"social cost: {c:.6g}  gap: {res.gap:.6g}  converged: {res.converged}"
        + ("  (stationary only)" if res.stationary_only else ""),
        table(_path_headers(game), _path_rows(game, res.flows, costs)),
    ])
    em.emit(payload, text)
    return EXIT_OK


def cmd_tolls(args, em):
    game = _load(args)
    try:
        scheme = construct_tolls(game, args.scheme)
    except NotAffine as exc:
        raise InputError(str(exc)) from None
    if args.nonnegative_tolls:
        scheme = shift_nonnegative(game, scheme)
    cond = verify_toll_condition(game, scheme)
    tolled = apply_tolls(game, scheme)
    after = check_potential_exists(tolled, mode="edgewise")
    edges = []
    rows = []
    for e, t in enumerate(scheme.edges):
        const, coef = t.const, t.coef
        edges.append({"edge": e, "const": const, "coef": coef})
        rows.append([e, const[0], coef[0, 0], coef[0, 1], const[1], coef[1, 0], coef[1, 1]])
    if args.write:
        write_game(tolled, args.write)
    payload = {"scheme": scheme.label, "type_independent": scheme.type_independent, "edges": edges,
               "condition": {"passed": cond.passed, "max_residual": cond.max_residual, "tol": cond.tol,
                             "residuals": cond.residuals},
               "post_toll": _symmetry_payload(after)}
    t1, t2 = game.type_names
    text = "\n".join([
        f"scheme: {scheme.label}",
        table(["edge", f"{t1}:c", f"{t1}:k1", f"{t1}:k2", f"{t2}:c", f"{t2}:k1", f"{t2}:k2"], rows),
        f"toll condition: {'pass' if cond.passed else 'FAIL'} (max residual {cond.max_residual:.3g})",
        f"post-toll verdict: {after.verdict.value}",
    ])
    em.emit(payload, text)
    return EXIT_OK if cond.passed and after.has_potential else EXIT_FAIL


def _poa_payload(rep):
    out = rep.to_dict()
    if rep.bound_check is not None:
        out["asymmetric_edges"] = rep.bound_check.asymmetric_edges
        out["indefinite_edges"] = rep.bound_check.indefinite_edges
    return out


def _poa_text(rep):
    rows = [
        ["C(equilibrium)", rep.cost_at_equilibrium],
        ["C(optimum)", rep.cost_at_optimum],
        ["PoA at computed equilibrium", rep.ratio],
        ["bound applicable", str(rep.bound_applicable)],
        ["bound", "-" if rep.bound_value is None else rep.bound_value],
        ["0/0 convention used", str(rep.zero_over_zero)],
        ["equilibrium epsilon", rep.epsilon],
    ]
    return table(["quantity", "value"], rows)


def cmd_poa(args, em):
    game = _load(args)
    opts = _options(args, game)
    try:
        rep = price_of_anarchy(game, opts, include_tolls=args.include_tolls)
    except NoPotential as exc:
        em.emit({"error": "NoPotential", "message": str(exc)}, f"no potential: {exc}")
        return EXIT_FAIL
    em.emit(_poa_payload(rep), _poa_text(rep))
    return EXIT_OK


def cmd_verify(args, em):
    game = _load(args)
    try:
        flows = load_flows(args.flows, game)
    except (OSError, HetrouteError, ValueError) as exc:
        raise InputError(str(exc)) from None
    try:
        cert = verify_nash(game, flows, used_flow_threshold=args.threshold, feas_tol=args.feas_tol)
    except InfeasibleFlows as exc:
        em.emit({"error": "InfeasibleFlows", "message": str(exc)}, f"infeasible: {exc}")
        return EXIT_FAIL
    ok = cert.epsilon <= args.epsilon_tol
    payload = {"passed": ok, "epsilon_tol": args.epsilon_tol, "certificate": _certificate_payload(cert)}
    text = f"epsilon: {cert.epsilon:.6g} ({'pass' if ok else 'FAIL'} at {args.epsilon_tol:g})"
    if cert.worst is not None:
        k, th, used, better, gap = cert.worst
        text += (f"\nworst: commodity {k}, type {game.type_names[th]}: used path {used} costs "
                 f"{gap:.6g} more than path {better}")
    em.emit(payload, text)
    return EXIT_OK if ok else EXIT_FAIL


def run_reference():
    """Solve the bundled 12-edge instance and compare with the published values."""
    game = reference.network_game()
    opts = SolveOptions()
    eq = solve_equilibrium(game, opts)
    costs = game.path_costs(eq.flows)
    _, expected = reference.expected_arrays(game)
    cost_err = float(np.max(np.abs(costs - expected)))
    rep = price_of_anarchy(game, opts)
    bound = theorem3_applicable(game)
    feas = np.allclose([eq.flows[ids, th].sum() for k, th, ids in game.blocks],
                       [game.demands[k, th] for k, th, ids in game.blocks], rtol=1e-9, atol=1e-9)
    checks = {
        "path_costs": cost_err <= reference.COST_TOL,
        "epsilon": eq.certificate.epsilon <= reference.EPSILON_TOL,
        "ratio": abs(rep.ratio - reference.EXPECTED_RATIO) <= reference.RATIO_TOL,
        "bound": bound.applicable and rep.ratio <= 2.0,
        "feasible": bool(feas),
    }
    return game, eq, costs, expected, cost_err, rep, checks


def cmd_repro(args, em):
    game, eq, costs, expected, cost_err, rep, checks = run_reference()
    rows = []
    for p, path in enumerate(game.paths.paths):
        rows.append([p, " ".join(f"e{e}" for e in path), costs[p, 0], expected[p, 0],
                     costs[p, 1], expected[p, 1]])
    payload = {
        "checks": checks, "max_cost_error": cost_err, "epsilon": eq.certificate.epsilon,
        "ratio": rep.ratio, "expected_ratio": reference.EXPECTED_RATIO,
        "cost_at_equilibrium": rep.cost_at_equilibrium, "cost_at_optimum": rep.cost_at_optimum,
        "bound_applicable": rep.bound_applicable,
        "paths": [{"path": p, "edges": list(path), "cost": costs[p], "expected": expected[p]}
                  for p, path in enumerate(game.paths.paths)],
    }
    text = "\n".join([
        table(["path", "edges", "cost_1", "expected_1", "cost_2", "expected_2"], rows),
        f"max |cost - expected|: {cost_err:.6g} (tolerance {reference.COST_TOL})",
        f"epsilon: {eq.certificate.epsilon:.6g}",
        f"ratio C(NE)/C(OPT): {rep.ratio:.6g} (expected {reference.EXPECTED_RATIO} +- {reference.RATIO_TOL})",
        f"bound applicable: {rep.bound_applicable}; ratio <= 2: {rep.ratio <= 2}",
        "checks: " + ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()),
    ])
    em.emit(payload, text)
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser

def _solver_flags(p):
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--gap-tol", dest="gap_tol", type=float)
    p.add_argument("--step-rule", dest="step_rule", choices=["exact_line_search", "harmonic"])
    p.add_argument("--variant", choices=["pairwise", "classic"])
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="hetroute", description="Two-type routing game solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, game=True):
        p = sub.add_parser(name, help=help_text)
        if game:
            p.add_argument("--game", required=True, help="game file (hetroute-game/1)")
            p.add_argument("--allow-unchecked", action="store_true",
                           help="load games whose costs fail the nonnegativity/monotonicity checks")
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--json-out", help="also write the JSON report to this file")
        p.set_defaults(func=func)
        return p

    p = add("check", cmd_check, "test whether the game admits a potential")
    p.add_argument("--mode", choices=["pathwise", "edgewise"], default="pathwise")

    p = add("solve", cmd_solve, "compute an equilibrium")
    _solver_flags(p)
    p.add_argument("--trace", help="write iter,V,gap CSV here")
    p.add_argument("--flows-out", help="write equilibrium flows CSV here")

    p = add("opt", cmd_opt, "compute the social optimum")
    _solver_flags(p)
    p.add_argument("--include-tolls", action="store_true")

    p = add("tolls", cmd_tolls, "construct a symmetry-restoring toll scheme")
    p.add_argument("--scheme", default="indistinguishable",
                   choices=["charge_type1", "charge_type2", "distinguishable_1", "distinguishable_2",
                            "indistinguishable"])
    p.add_argument("--nonnegative-tolls", action="store_true",
                   help="shift each edge's toll by a constant so sampled values are >= 0")
    p.add_argument("--write", help="write the tolled game to this file")

    p = add("poa", cmd_poa, "price of anarchy at the computed equilibrium")
    _solver_flags(p)
    p.add_argument("--include-tolls", action="store_true")

    p = add("verify", cmd_verify, "check whether given flows are an equilibrium")
    p.add_argument("--flows", required=True, help="CSV with path_id,type,flow")
    p.add_argument("--feas-tol", dest="feas_tol", type=float, default=1e-9)
    p.add_argument("--threshold", type=float, default=None, help="used-flow threshold")
    p.add_argument("--epsilon-tol", dest="epsilon_tol", type=float, default=1e-6)

    add("repro-paper", cmd_repro, "solve the bundled 12-edge reference instance", game=False)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    em = Emitter(args, out)
    try:
        return args.func(args, em)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
