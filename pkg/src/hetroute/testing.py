"""Random game generators used by the test suite and the benchmark."""

from __future__ import annotations

import numpy as np

from .costs import AffineEdgeCost
from .game import Game
from .network import Commodity, Graph


def random_dag(rng, n_nodes, density=0.6):
    """Random DAG on ``0..n-1`` (edges go from lower to higher ids) with 0 -> n-1 reachable."""
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < density:
                edges.append((i, j))
    # a backbone chain keeps every vertex reachable from 0 and reaching n-1
    for i in range(n_nodes - 1):
        if (i, i + 1) not in edges:
            edges.append((i, i + 1))
    edges.sort()
    return Graph(tuple(range(n_nodes)), tuple(edges))


def symmetric_alpha(rng, psd=True, zero_prob=0.15):
    """Random nonnegative 2x2 matrix with equal off-diagonals."""
    if rng.random() < zero_prob:
        return np.zeros((2, 2))
    a11, a22 = rng.uniform(0.1, 3.0, size=2)
    cap = np.sqrt(a11 * a22) if psd else 2.0 * max(a11, a22)
    a12 = rng.uniform(0.0, 1.0) * cap
    return np.array([[a11, a12], [a12, a22]])


def random_beta(rng):
    b = rng.uniform(0.0, 5.0, size=2)
    if rng.random() < 0.2:
        b[:] = 0.0
    return b


def random_commodities(rng, graph, n_commodities, max_demand=5.0, zero_type_prob=0.15):
    n = len(graph.vertices)
    coms = []
    for _ in range(n_commodities):
        s = int(rng.integers(0, n - 1))
        t = int(rng.integers(s + 1, n))
        d = rng.uniform(0.1, max_demand, size=2)
        for th in range(2):
            if rng.random() < zero_type_prob:
                d[th] = 0.0
        coms.append(Commodity(s, t, tuple(d)))
    return coms


def random_symmetric_game(rng, max_nodes=5, max_commodities=2, psd=True):
    n = int(rng.integers(2, max_nodes + 1))
    graph = random_dag(rng, n)
    costs = [AffineEdgeCost(symmetric_alpha(rng, psd), random_beta(rng)) for _ in graph.edges]
    coms = random_commodities(rng, graph, int(rng.integers(1, max_commodities + 1)))
    return Game.build(graph, coms, costs)


def random_asymmetric_game(rng, max_nodes=5, max_commodities=2, scale=0.5):
    """Affine game whose cross slopes differ on most edges."""
    n = int(rng.integers(2, max_nodes + 1))
    graph = random_dag(rng, n)
    costs = []
    for _ in graph.edges:
        a = symmetric_alpha(rng, zero_prob=0.0)
        d = rng.uniform(-scale, scale)
        a[1, 0] = max(a[0, 1] + d, 0.0)
        costs.append(AffineEdgeCost(a, random_beta(rng)))
    coms = random_commodities(rng, graph, int(rng.integers(1, max_commodities + 1)))
    return Game.build(graph, coms, costs)


def integer_residual_game(rng, unit=1e-3):
    """Single-commodity game with cross-slope differences ``k_e * unit`` for integer ``k_e``.

    Returns ``(game, k)``. About a third of the instances are symmetric, a
    third carry random nonzero ``k``, and a third place ``+k`` and ``-k`` on
    a forced series pair (a vertex with exactly one edge in and one edge out)
    so that residuals cancel on every path through it.
    """
    kind = int(rng.integers(0, 3))
    if kind == 2:
        # 0 -> 1 -> 2 is the forced series pair; the rest hangs off 0 and 2
        n = int(rng.integers(3, 6))
        edges = [(0, 1), (1, 2), (0, 2)]
        for i in range(n):
            for j in range(i + 1, n):
                if 1 in (i, j) or (i, j) in edges:
                    continue
                if rng.random() < 0.6:
                    edges.append((i, j))
        for i in range(2, n - 1):
            if (i, i + 1) not in edges:
                edges.append((i, i + 1))
        edges.sort()
        graph = Graph(tuple(range(n)), tuple(edges))
        k = np.zeros(len(edges), dtype=np.int64)
        v = int(rng.integers(1, 6)) * int(rng.choice([-1, 1]))
        k[edges.index((0, 1))] = v
        k[edges.index((1, 2))] = -v
        for e, (i, j) in enumerate(edges):
            if (i, j) not in ((0, 1), (1, 2)) and rng.random() < 0.3:
                k[e] = int(rng.integers(1, 6)) * int(rng.choice([-1, 1]))
    else:
        n = int(rng.integers(2, 6))
        graph = random_dag(rng, n)
        k = np.zeros(len(graph.edges), dtype=np.int64)
        if kind == 1:
            for e in range(len(k)):
                if rng.random() < 0.6:
                    k[e] = int(rng.integers(1, 6)) * int(rng.choice([-1, 1]))
    costs = []
    for e in range(len(graph.edges)):
        a = symmetric_alpha(rng, zero_prob=0.0)
        a[0, 1] = max(a[0, 1], 6 * unit)
        a[1, 0] = a[0, 1] + k[e] * unit
        costs.append(AffineEdgeCost(a, random_beta(rng)))
    n = len(graph.vertices)
    com = Commodity(0, n - 1, tuple(rng.uniform(0.5, 5.0, size=2)))
    return Game.build(graph, [com], costs), k


def small_oracle_game(rng):
    """Affine symmetric game with at most 6 paths and at most 1e7 lattice points at grid 200.

    Layouts: one commodity with two paths and both types; one commodity with
    three or four paths and one type; or two commodities with three active
    (commodity, type) blocks of two paths each.
    """
    layout = int(rng.integers(0, 4))
    if layout == 0:
        specs = [(2, (True, True))]
    elif layout == 1:
        specs = [(3, (True, False) if rng.random() < 0.5 else (False, True))]
    elif layout == 2:
        specs = [(4, (True, False) if rng.random() < 0.5 else (False, True))]
    else:
        specs = [(2, (True, True)), (2, (True, False) if rng.random() < 0.5 else (False, True))]

    # each commodity gets its own source/sink; its paths are parallel two-hop
    # routes through private middle vertices, plus edges shared across commodities
    vertices = []
    edges = []
    explicit = {}
    coms = []
    shared_mid = ("m",)
    vertices.append(shared_mid[0])
    for k, (n_paths, active) in enumerate(specs):
        s, t = f"s{k}", f"t{k}"
        vertices += [s, t]
        plist = []
        for j in range(n_paths):
            if j == 0 and len(specs) > 1:
                # route through the shared vertex so commodities interact
                e_in = len(edges)
                edges.append((s, shared_mid[0]))
                e_out = len(edges)
                edges.append((shared_mid[0], t))
                plist.append((e_in, e_out))
                continue
            mid = f"v{k}_{j}"
            vertices.append(mid)
            e_in = len(edges)
            edges.append((s, mid))
            e_out = len(edges)
            edges.append((mid, t))
            plist.append((e_in, e_out))
        explicit[k] = plist
        d = tuple(float(rng.uniform(0.5, 4.0)) if a else 0.0 for a in active)
        coms.append(Commodity(s, t, d))
    graph = Graph(tuple(vertices), tuple(edges))
    costs = [AffineEdgeCost(symmetric_alpha(rng), random_beta(rng)) for _ in edges]
    return Game.build(graph, coms, costs, explicit_paths=explicit)
