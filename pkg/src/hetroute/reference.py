"""Bundled reference instance: a 9-vertex, 12-edge network with three commodities.

The expected equilibrium costs and flows below are published values printed to
two decimals, keyed by edge sequence so they do not depend on path order.
"""

import numpy as np

from .costs import AffineEdgeCost
from .game import Game
from .network import Commodity, Graph

VERTICES = tuple(range(9))
EDGES = (
    (0, 3, 8), (1, 0, 1), (2, 0, 4), (3, 5, 1), (4, 4, 5), (5, 6, 1),
    (6, 5, 3), (7, 4, 6), (8, 6, 3), (9, 2, 4), (10, 2, 3), (11, 7, 2),
)
# per-edge coefficients: first-type own slope, shared cross slope, second-type own slope, offsets
ALPHA_11 = (1.0, 2.0, 3.0, 1.0, 4.0, 0.5, 1.0, 1.0, 2.0, 1.0, 4.0, 1.0)
ALPHA_12 = (0.6, 0.4, 0.1, 0.1, 0.5, 0.1, 0.7, 0.1, 0.1, 0.2, 0.1, 0.3)
ALPHA_22 = (2.0, 3.0, 1.0, 0.8, 1.0, 1.0, 1.5, 3.0, 1.7, 3.0, 1.0, 1.3)
BETA_1 = (2.0, 2.0, 4.5, 2.0, 2.0, 4.5, 2.0, 2.0, 4.5, 2.0, 2.0, 4.5)
BETA_2 = (4.0, 4.0, 1.5, 4.0, 4.0, 1.5, 4.0, 4.0, 1.5, 4.0, 4.0, 1.5)

COMMODITIES = ((0, 1, (5.0, 1.0)), (2, 3, (3.0, 3.0)), (7, 8, (2.0, 4.0)))
PATHS = (
    ((1,), (2, 4, 3), (2, 7, 5)),
    ((10,), (9, 7, 8), (9, 4, 6)),
    ((11, 10, 0), (11, 9, 7, 8, 0), (11, 9, 4, 6, 0)),
)

# published equilibrium: edge sequence -> ((flow1, flow2), (cost1, cost2))
EXPECTED = {
    (1,): ((4.97, 0.79), (12.26, 8.35)),
    (2, 4, 3): ((0.00, 0.00), (13.18, 10.29)),
    (2, 7, 5): ((0.03, 0.21), (12.26, 8.35)),
    (9, 7, 8): ((1.04, 0.06), (13.92, 11.22)),
    (9, 4, 6): ((0.04, 0.00), (13.92, 13.98)),
    (10,): ((1.92, 2.94), (13.92, 11.22)),
    (11, 9, 7, 8, 0): ((0.01, 0.00), (28.02, 31.73)),
    (11, 9, 4, 6, 0): ((1.10, 0.00), (28.02, 34.48)),
    (11, 10, 0): ((0.88, 4.00), (28.02, 31.72)),
}
EXPECTED_RATIO = 1.0137
COST_TOL = 0.05
RATIO_TOL = 0.005
EPSILON_TOL = 1e-3


def edge_costs():
    return tuple(
        AffineEdgeCost([[ALPHA_11[e], ALPHA_12[e]], [ALPHA_12[e], ALPHA_22[e]]], [BETA_1[e], BETA_2[e]])
        for e in range(len(EDGES))
    )


def network_game():
    graph = Graph.from_edge_list(VERTICES, EDGES)
    commodities = [Commodity(s, t, d) for s, t, d in COMMODITIES]
    explicit = {k: plist for k, plist in enumerate(PATHS)}
    return Game.build(graph, commodities, edge_costs(), explicit_paths=explicit)


def expected_arrays(game):
    """Published flows and costs as ``(P, 2)`` arrays in the game's path order."""
    flows = np.array([EXPECTED[tuple(p)][0] for p in game.paths.paths])
    costs = np.array([EXPECTED[tuple(p)][1] for p in game.paths.paths])
    return flows, costs
