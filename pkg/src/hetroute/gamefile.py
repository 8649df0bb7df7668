"""Text formats: game files, flow CSVs and solver traces.

Game files are line oriented. ``#`` starts a comment; blank lines are ignored.

    hetroute-game/1
    types car truck
    vertices 0 1 2
    edge 0 0 1 affine alpha=1,0.5,0.5,2 beta=2,4
    edge 1 1 2 platooning L=1 a=-0.01 b=1 c0=1 alpha_fuel=0.1 beta_fuel=0.2 dgamma0=-0.03
    commodity 0 0 2 5 1
    path 0 0 1
    toll 0 theta1=0,0,0 theta2=0,-0.2,0
    tolls auto indistinguishable
    option gap_tol 1e-10

``alpha`` lists a11,a12,a21,a22 row-major; toll entries are ``const,k1,k2``.
``path`` lines give a commodity's paths explicitly; commodities without them
get every simple path. ``physical`` edges take raw truck constants that are
lumped into the platooning coefficients at load.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path

import numpy as np

from .costs import AffineEdgeCost, PhysicalConstants, PlatooningParams, platooning_affine, validate_assumption1
from .errors import AssumptionViolated, ParseError, UnsupportedTypeCount, ValidationError
from .game import Game
from .network import Commodity, Graph
from .tolls import LinearToll, TollScheme, construct_tolls

VERSION = "hetroute-game/1"
AUTO_SCHEMES = ("charge_type1", "charge_type2", "distinguishable_1", "distinguishable_2", "indistinguishable")
OPTION_TYPES = {
    "max_iters": int,
    "gap_tol": float,
    "step_rule": str,
    "seed": int,
    "variant": str,
    "mode": str,
    "used_flow_threshold": float,
    "max_hops": int,
}
TYPE_ALIASES = {"car": 0, "truck": 1, "theta1": 0, "theta2": 1}


def _vertex(tok):
    try:
        return int(tok)
    except ValueError:
        return tok


def _float(tok, line, source, what):
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"{what}: expected a number, got {tok!r}", line, source) from None
    if not np.isfinite(x):
        raise ParseError(f"{what}: value must be finite", line, source)
    return x


def _int(tok, line, source, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"{what}: expected an integer, got {tok!r}", line, source) from None


def _keyvals(tokens, line, source):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", line, source)
        k, v = tok.split("=", 1)
        if k in out:
            raise ParseError(f"duplicate field {k!r}", line, source)
        out[k] = v
    return out


def _floats(text, n, line, source, what):
    parts = text.split(",")
    if len(parts) != n:
        raise ParseError(f"{what}: expected {n} comma-separated numbers", line, source)
    return [_float(p, line, source, what) for p in parts]


def _dataclass_from(cls, kv, line, source):
    names = {f.name for f in dataclasses.fields(cls)}
    required = {f.name for f in dataclasses.fields(cls)
                if f.default is dataclasses.MISSING}
    unknown = set(kv) - names
    if unknown:
        raise ParseError(f"unknown {cls.__name__} field(s): {', '.join(sorted(unknown))}", line, source)
    missing = required - set(kv)
    if missing:
        raise ParseError(f"missing {cls.__name__} field(s): {', '.join(sorted(missing))}", line, source)
    return cls(**{k: _float(v, line, source, k) for k, v in kv.items()})


def _parse_cost(kind, tokens, line, source):
    kv = _keyvals(tokens, line, source)
    if kind == "affine":
        if set(kv) != {"alpha", "beta"}:
            raise ParseError("affine edge needs exactly alpha=... and beta=...", line, source)
        alpha = _floats(kv["alpha"], 4, line, source, "alpha")
        beta = _floats(kv["beta"], 2, line, source, "beta")
        return AffineEdgeCost(np.reshape(alpha, (2, 2)), beta)
    if kind in ("platooning", "physical"):
        cls = PlatooningParams if kind == "platooning" else PhysicalConstants
        try:
            params = _dataclass_from(cls, kv, line, source)
            return platooning_affine(params)
        except AssumptionViolated as exc:
            raise AssumptionViolated(f"{source or '<game>'}:{line}: {exc}") from None
    raise ParseError(f"unknown cost kind {kind!r}", line, source)


def parse_game(text, source=None, allow_unchecked=False):
    lines = text.splitlines()
    header = None
    type_names = ("theta1", "theta2")
    vertices = None
    edges = {}
    commodities = {}
    paths = {}
    tolls = {}
    auto = None
    options = {}
    for no, raw in enumerate(lines, start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        tok = content.split()
        if header is None:
            if tok != [VERSION]:
                raise ParseError(f"first line must be {VERSION!r}", no, source)
            header = no
            continue
        head, args = tok[0], tok[1:]
        if head == "types":
            type_names = tuple(args)
            if len(type_names) != 2:
                raise UnsupportedTypeCount(f"{source or '<game>'}:{no}: exactly two types are supported")
        elif head == "vertices":
            if vertices is not None:
                raise ParseError("vertices given twice", no, source)
            vertices = tuple(_vertex(a) for a in args)
        elif head == "edge":
            if len(args) < 4:
                raise ParseError("edge needs: id tail head kind fields...", no, source)
            eid = _int(args[0], no, source, "edge id")
            if eid in edges:
                raise ParseError(f"duplicate edge id {eid}", no, source)
            cost = _parse_cost(args[3], args[4:], no, source)
            edges[eid] = (_vertex(args[1]), _vertex(args[2]), cost, no)
        elif head == "commodity":
            if len(args) != 5:
                raise ParseError("commodity needs: id source sink demand1 demand2", no, source)
            cid = _int(args[0], no, source, "commodity id")
            if cid in commodities:
                raise ParseError(f"duplicate commodity id {cid}", no, source)
            d = (_float(args[3], no, source, "demand"), _float(args[4], no, source, "demand"))
            if min(d) < 0:
                raise ParseError("demands must be >= 0", no, source)
            commodities[cid] = (_vertex(args[1]), _vertex(args[2]), d)
        elif head == "path":
            if not args:
                raise ParseError("path needs a commodity id", no, source)
            cid = _int(args[0], no, source, "commodity id")
            paths.setdefault(cid, []).append(tuple(_int(a, no, source, "edge id") for a in args[1:]))
        elif head == "toll":
            if len(args) < 2:
                raise ParseError("toll needs: edge theta1=c,k1,k2 theta2=c,k1,k2", no, source)
            eid = _int(args[0], no, source, "edge id")
            if eid in tolls:
                raise ParseError(f"duplicate toll for edge {eid}", no, source)
            kv = _keyvals(args[1:], no, source)
            const, coef = np.zeros(2), np.zeros((2, 2))
            for key, val in kv.items():
                th = TYPE_ALIASES.get(key)
                if th is None and key in type_names:
                    th = type_names.index(key)
                if th is None:
                    raise ParseError(f"unknown type {key!r} in toll", no, source)
                c, k1, k2 = _floats(val, 3, no, source, key)
                const[th] = c
                coef[th] = (k1, k2)
            tolls[eid] = (LinearToll(const, coef), no)
        elif head == "tolls":
            if len(args) != 2 or args[0] != "auto" or args[1] not in AUTO_SCHEMES:
                raise ParseError(f"expected 'tolls auto <{'|'.join(AUTO_SCHEMES)}>'", no, source)
            auto = (args[1], no)
        elif head == "option":
            if len(args) != 2:
                raise ParseError("option needs: key value", no, source)
            key, val = args
            if key not in OPTION_TYPES:
                raise ParseError(f"unknown option {key!r}", no, source)
            try:
                options[key] = OPTION_TYPES[key](val)
            except ValueError:
                raise ParseError(f"bad value for option {key!r}: {val!r}", no, source) from None
        else:
            raise ParseError(f"unknown directive {head!r}", no, source)
    if header is None:
        raise ParseError(f"missing {VERSION!r} header", 1, source)
    if vertices is None:
        raise ParseError("missing vertices line", None, source)
    if sorted(edges) != list(range(len(edges))):
        raise ValidationError("edge ids must be dense 0..|E|-1")
    if sorted(commodities) != list(range(len(commodities))):
        raise ValidationError("commodity ids must be dense 0..K-1")
    for cid in paths:
        if cid not in commodities:
            raise ValidationError(f"path lines reference unknown commodity {cid}")
    if auto is not None and tolls:
        raise ParseError("explicit toll lines and 'tolls auto' are mutually exclusive", auto[1], source)
    for eid, (_, no) in tolls.items():
        if eid not in edges:
            raise ParseError(f"toll for unknown edge {eid}", no, source)

    graph = Graph.from_edge_list(vertices, [(e, t, h) for e, (t, h, _, _) in edges.items()])
    costs = [edges[e][2] for e in range(len(edges))]
    if not allow_unchecked:
        for e, cost in enumerate(costs):
            rep = validate_assumption1(cost)
            if not rep.ok:
                raise AssumptionViolated(
                    f"{source or '<game>'}:{edges[e][3]}: edge {e} violates cost assumptions "
                    f"(nonnegativity {rep.nonnegativity}, monotonicity {rep.monotonicity}, {rep.coefficients})")
    coms = [Commodity(*commodities[k]) for k in range(len(commodities))]
    game = Game.build(graph, coms, costs, explicit_paths=paths, max_hops=options.get("max_hops"),
                      type_names=type_names, options=options)
    if auto is not None:
        game = game.with_tolls(construct_tolls(game, auto[0]))
    elif tolls:
        game = game.with_tolls(TollScheme.from_mapping(
            game.n_edges, {e: t for e, (t, _) in tolls.items()}, label="file"))
    return game


def load_game(path, allow_unchecked=False):
    path = Path(path)
    return parse_game(path.read_text(), source=str(path), allow_unchecked=allow_unchecked)


def _fmt(x):
    return repr(float(x))


def _cost_line(cost):
    origin = getattr(cost, "origin", None)
    if isinstance(origin, PhysicalConstants):
        kind = "physical"
    elif isinstance(origin, PlatooningParams):
        kind = "platooning"
    else:
        kind = None
    if kind is not None:
        fields = " ".join(f"{f.name}={_fmt(getattr(origin, f.name))}" for f in dataclasses.fields(origin))
        return f"{kind} {fields}"
    if not cost.is_affine:
        raise ValueError("only affine and platooning edge costs can be written to a game file")
    a = ",".join(_fmt(x) for x in cost.alpha.ravel())
    b = ",".join(_fmt(x) for x in cost.beta)
    return f"affine alpha={a} beta={b}"


def serialize_game(game):
    out = [VERSION, "types " + " ".join(game.type_names),
           "vertices " + " ".join(str(v) for v in game.graph.vertices)]
    for e, (t, h) in enumerate(game.graph.edges):
        out.append(f"edge {e} {t} {h} {_cost_line(game.costs[e])}")
    for k, c in enumerate(game.commodities):
        out.append(f"commodity {k} {c.source} {c.sink} {_fmt(c.demand[0])} {_fmt(c.demand[1])}")
    for k in game.paths.explicit:
        for p in game.paths.by_commodity[k]:
            out.append(" ".join(["path", str(k)] + [str(e) for e in p]))
    if game.tolls is not None:
        label = game.tolls.label
        if label in AUTO_SCHEMES:
            out.append(f"tolls auto {label}")
        elif game.tolls.is_linear:
            for e, t in enumerate(game.tolls.edges):
                if not np.any(t.const) and not np.any(t.coef):
                    continue
                parts = [f"{name}={','.join(_fmt(x) for x in (t.const[i], *t.coef[i]))}"
                         for i, name in enumerate(("theta1", "theta2"))]
                out.append(f"toll {e} " + " ".join(parts))
        else:
            raise ValueError("nonlinear toll schemes cannot be written to a game file")
    for key in sorted(game.options):
        out.append(f"option {key} {game.options[key]}")
    return "\n".join(out) + "\n"


def write_game(game, path):
    Path(path).write_text(serialize_game(game))


# ---------------------------------------------------------------------------
# flows and traces

def parse_flows(text, game, source=None):
    """Read ``path_id,type,flow`` rows into an ``(n_paths, 2)`` array.

    Types may be written as theta1/theta2, as the game's type names, or via an
    alias line ``# types car=theta1,truck=theta2`` before the header.
    """
    names = {name: i for i, name in enumerate(game.type_names)}
    names.update(TYPE_ALIASES)
    body = []
    for no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            rest = stripped[1:].strip()
            if rest.startswith("types "):
                for item in rest[6:].split(","):
                    alias, _, target = item.strip().partition("=")
                    if target not in ("theta1", "theta2"):
                        raise ParseError(f"alias {item!r} must map to theta1 or theta2", no, source)
                    names[alias] = TYPE_ALIASES[target]
            continue
        if stripped:
            body.append((no, raw))
    if not body:
        raise ParseError("empty flows file", None, source)
    no, header = body[0]
    if [h.strip() for h in header.split(",")] != ["path_id", "type", "flow"]:
        raise ParseError("header must be path_id,type,flow", no, source)
    flows = np.zeros((game.n_paths, 2))
    seen = set()
    for no, raw in body[1:]:
        row = next(csv.reader([raw]))
        if len(row) != 3:
            raise ParseError("expected 3 fields", no, source)
        p = _int(row[0].strip(), no, source, "path_id")
        th = names.get(row[1].strip())
        if th is None:
            raise ParseError(f"unknown type {row[1].strip()!r}", no, source)
        if not 0 <= p < game.n_paths:
            raise ParseError(f"unknown path id {p}", no, source)
        if (p, th) in seen:
            raise ParseError(f"duplicate entry for path {p}", no, source)
        seen.add((p, th))
        flows[p, th] = _float(row[2].strip(), no, source, "flow")
    return flows


def load_flows(path, game):
    path = Path(path)
    return parse_flows(path.read_text(), game, source=str(path))


def format_flows(flows):
    buf = io.StringIO()
    buf.write("path_id,type,flow\n")
    for p in range(flows.shape[0]):
        for th, name in enumerate(("theta1", "theta2")):
            buf.write(f"{p},{name},{_fmt(flows[p, th])}\n")
    return buf.getvalue()


def format_trace(trace):
    buf = io.StringIO()
    buf.write("iter,V,gap\n")
    for it, v, gap in trace:
        buf.write(f"{it},{_fmt(v)},{_fmt(gap)}\n")
    return buf.getvalue()
