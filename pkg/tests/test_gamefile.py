from pathlib import Path

import numpy as np
import pytest

from hetroute import reference
from hetroute.errors import HetrouteError, ParseError
from hetroute.gamefile import (format_flows, format_trace, load_game, parse_flows, parse_game,
                               serialize_game)
from hetroute.tolls import apply_tolls, construct_tolls, indistinguishable_tolls

DATA = Path(__file__).resolve().parents[1] / "src" / "hetroute" / "data"

SMALL = """hetroute-game/1
# comment lines and blank lines are ignored

types car truck
vertices a b c
edge 0 a b affine alpha=1,0.5,0.5,1 beta=1,2
edge 1 b c affine alpha=2,0,0,2 beta=0,0
edge 2 a c affine alpha=1,0,0,1 beta=3,3
edge 3 b b affine alpha=1,0,0,1 beta=0,0
commodity 0 a c 1.5 2
option gap_tol 1e-10
"""


def same_game(a, b):
    assert a.graph == b.graph
    assert a.commodities == b.commodities
    assert a.paths.by_commodity == b.paths.by_commodity
    assert a.type_names == b.type_names
    assert a.options == b.options
    for x, y in zip(a.costs, b.costs):
        assert np.array_equal(x.alpha, y.alpha) and np.array_equal(x.beta, y.beta)


def test_parse_small_game():
    game = parse_game(SMALL)
    assert game.type_names == ("car", "truck")
    assert game.n_edges == 4
    # the self-loop never appears on a path
    assert sorted(game.paths.paths) == [(0, 1), (2,)]
    assert game.options["gap_tol"] == 1e-10


@pytest.mark.parametrize("text", [SMALL, (DATA / "fig1.game").read_text(), (DATA / "platoon.game").read_text()])
def test_round_trip(text):
    game = parse_game(text)
    again = parse_game(serialize_game(game))
    same_game(game, again)
    assert serialize_game(again) == serialize_game(game)


def test_round_trip_keeps_platooning_and_tolls():
    game = load_game(DATA / "platoon.game")
    text = serialize_game(apply_tolls(game, construct_tolls(game, "charge_type2")))
    assert "platooning L=1.0" in text and "tolls auto charge_type2" in text
    back = parse_game(text)
    assert back.tolls.label == "charge_type2"
    custom = serialize_game(apply_tolls(game, indistinguishable_tolls(game, c=1.0)))
    again = parse_game(custom)
    assert np.allclose(again.tolls.edges[0].const, [1.0, 1.0])


def test_reference_file_matches_builtin():
    same_game(load_game(DATA / "fig1.game"), reference.network_game())


@pytest.mark.parametrize("text, line, fragment", [
    ("vertices 0 1\n", 1, "first line"),
    ("hetroute-game/1\nvertices 0 1\nedge 0 0 1 affine alpha=1,0,0 beta=0,0\n", 3, "alpha"),
    ("hetroute-game/1\nvertices 0 1\nedge 0 0 1 cubic a=1\n", 3, "unknown cost kind"),
    ("hetroute-game/1\nvertices 0 1\nedge 0 0 1 affine alpha=1,0,0,1 beta=0,x\n", 3, "number"),
    ("hetroute-game/1\nvertices 0 1\nfrobnicate\n", 3, "unknown directive"),
    ("hetroute-game/1\nvertices 0 1\ncommodity 0 0 1 -1 0\n", 3, ">= 0"),
    ("hetroute-game/1\nvertices 0 1\nedge 0 0 1 affine alpha=1,0,0,1 beta=0,0\n"
     "edge 0 0 1 affine alpha=1,0,0,1 beta=0,0\n", 4, "duplicate edge"),
    ("hetroute-game/1\nvertices 0 1\nedge 0 0 1 platooning L=1 a=-0.01\n", 3, "missing"),
    ("hetroute-game/1\nvertices 0 1\noption speed 3\n", 3, "unknown option"),
])
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ParseError, match=fragment) as info:
        parse_game(text, source="g.game")
    assert info.value.line == line
    assert str(info.value).startswith(f"g.game:{line}:")


def test_unknown_vertex_rejected():
    with pytest.raises(HetrouteError):
        parse_game("hetroute-game/1\nvertices 0 1\nedge 0 0 7 affine alpha=1,0,0,1 beta=0,0\n")


def test_no_commodities():
    game = parse_game("hetroute-game/1\nvertices 0 1\nedge 0 0 1 affine alpha=1,0,0,1 beta=0,0\n")
    assert game.n_paths == 0 and game.blocks == []


def test_flows_with_aliases():
    game = parse_game(SMALL)
    text = "# types c=theta1,t=theta2\npath_id,type,flow\n0,c,1.0\n1,truck,2\n1,theta1,0.5\n"
    flows = parse_flows(text, game)
    assert np.array_equal(flows, [[1.0, 0.0], [0.5, 2.0]])
    assert np.array_equal(parse_flows(format_flows(flows), game), flows)


@pytest.mark.parametrize("text, fragment", [
    ("", "empty"),
    ("path,type,flow\n", "header"),
    ("path_id,type,flow\n0,bus,1\n", "unknown type"),
    ("path_id,type,flow\n9,theta1,1\n", "unknown path"),
    ("path_id,type,flow\n0,theta1,1\n0,theta1,2\n", "duplicate"),
    ("# types c=theta3\npath_id,type,flow\n", "alias"),
])
def test_flow_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_flows(text, parse_game(SMALL))


def test_trace_format():
    assert format_trace([(1, 2.5, 0.1)]) == "iter,V,gap\n1,2.5,0.1\n"
