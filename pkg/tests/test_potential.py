from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hetroute import reference
from hetroute.costs import AffineEdgeCost, GeneralEdgeCost
from hetroute.errors import UnsupportedTypeCount
from hetroute.game import Game
from hetroute.gamefile import load_game
from hetroute.network import Commodity, Graph
from hetroute.potential import (Verdict, check_potential_exists, cross_derivative_mismatch, edge_potential,
                                potential_gradient, potential_value, symmetry_residual)
from hetroute.testing import random_symmetric_game

DATA = Path(__file__).resolve().parents[1] / "src" / "hetroute" / "data"


def grad_cost():
    """Gradient of F = x^3/3 + x^2 y + y^3 + x + 2y, so F is its own potential."""
    def fn(x, y):
        return (x * x + 2 * x * y + 1.0, x * x + 3 * y * y + 2.0)

    def jac(x, y):
        return [[2 * x + 2 * y, 2 * x], [2 * x, 6 * y]]

    return GeneralEdgeCost(fn, jac, name="grad")


def closed_form(x, y):
    return x**3 / 3 + x * x * y + y**3 + x + 2 * y


def series_game(k1, k2, unit=0.01):
    """Two edges in series, one path, cross-slope differences k1*unit and k2*unit."""
    g = Graph((0, 1, 2), ((0, 1), (1, 2)))
    costs = [AffineEdgeCost([[1.0, 0.2], [0.2 + k * unit, 1.0]], [1.0, 1.0]) for k in (k1, k2)]
    return Game.build(g, [Commodity(0, 2, (1.0, 1.0))], costs)


def test_residual_examples():
    assert symmetry_residual(reference.edge_costs()[0], 1.0, 1.0) == 0.0
    skew = AffineEdgeCost([[1.0, 2.0], [1.0, 1.0]], [0.0, 0.0])
    assert symmetry_residual(skew, 0.0, 0.0) == -1.0
    assert symmetry_residual(grad_cost(), 0.3, 0.8) == pytest.approx(0.0, abs=1e-7)


def test_reference_network_is_edgewise():
    rep = check_potential_exists(reference.network_game())
    assert rep.verdict is Verdict.EDGEWISE and rep.symbolic
    assert rep.max_residual == 0.0 and rep.failing_edges() == []


def test_platooning_file_is_asymmetric():
    rep = check_potential_exists(load_game(DATA / "platoon.game"), mode="edgewise")
    assert rep.verdict is Verdict.ASYMMETRIC and not rep.has_potential
    assert rep.failing_edges() == [0, 1, 2]
    assert np.allclose(rep.signed_residuals, -0.002)
    assert check_potential_exists(load_game(DATA / "platoon_c0zero.game")).verdict is Verdict.EDGEWISE


def test_cancelling_series_pair_is_pathwise_only():
    game = series_game(3, -3)
    assert check_potential_exists(game, mode="pathwise").verdict is Verdict.PATHWISE
    assert check_potential_exists(game, mode="edgewise").verdict is Verdict.ASYMMETRIC
    rep = check_potential_exists(series_game(3, -2))
    assert rep.verdict is Verdict.ASYMMETRIC and rep.failing_pairs() == [(0, 0)]


def test_three_types_rejected():
    g = Graph((0, 1), ((0, 1),))
    with pytest.raises(UnsupportedTypeCount):
        Game.build(g, [Commodity(0, 1, (1, 1))], [reference.edge_costs()[0]], type_names=("a", "b", "c"))


def test_general_cost_verdicts():
    g = Graph((0, 1), ((0, 1), (0, 1)))
    com = [Commodity(0, 1, (1.0, 2.0))]
    sym = Game.build(g, com, [grad_cost(), grad_cost()])
    rep = check_potential_exists(sym)
    assert rep.verdict is Verdict.EDGEWISE and not rep.symbolic
    skew = GeneralEdgeCost(lambda x, y: (x + 2 * y + x * x, x + y))
    assert check_potential_exists(Game.build(g, com, [grad_cost(), skew])).verdict is Verdict.ASYMMETRIC


def test_affine_potential_examples():
    g = Graph((0, 1), ((0, 1),))
    cost = AffineEdgeCost([[1.0, 0.5], [0.5, 1.0]], [0.0, 0.0])
    game = Game.build(g, [Commodity(0, 1, (1.0, 1.0))], [cost])
    assert potential_value(game, np.array([[1.0, 1.0]])) == pytest.approx(1.5)
    flat = Game.build(g, [Commodity(0, 1, (2.0, 3.0))], [AffineEdgeCost(np.zeros((2, 2)), [1.5, 0.5])])
    assert potential_value(flat, np.array([[2.0, 3.0]])) == pytest.approx(4.5)
    assert potential_value(game, np.zeros((1, 2))) == 0.0


def test_quadrature_matches_closed_form():
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(0, 4, size=(30, 2)):
        assert edge_potential(grad_cost(), x, y) == pytest.approx(closed_form(x, y), rel=1e-9, abs=1e-12)
    for cost in reference.edge_costs():
        general = GeneralEdgeCost(cost.value)
        for x, y in rng.uniform(0, 5, size=(5, 2)):
            a = cost.alpha
            exact = 0.5 * a[0, 0] * x * x + 0.5 * a[1, 1] * y * y + a[1, 0] * x * y + cost.beta @ [x, y]
            assert edge_potential(general, x, y) == pytest.approx(exact, rel=1e-9)


def test_three_integral_form():
    """Direct double integral of the cross derivative agrees with the reduced form."""
    cost = grad_cost()
    rng = np.random.default_rng(1)
    for x, y in rng.uniform(0.1, 2, size=(5, 2)):
        first = integrate.quad(lambda u: cost.value(u, 0.0)[0], 0, x)[0]
        second = integrate.quad(lambda v: cost.value(0.0, v)[1], 0, y)[0]
        cross = integrate.dblquad(lambda v, u: cost.jacobian(u, v)[0][1], 0, x, 0, y)[0]
        assert first + second + cross == pytest.approx(edge_potential(cost, x, y), rel=1e-9)


def test_potential_from_type_utilities():
    """For symmetric costs, V = U_1 + int_0^phi2 l2(0, u) du on every edge."""
    cost = grad_cost()
    rng = np.random.default_rng(2)
    for x, y in rng.uniform(0, 3, size=(20, 2)):
        u1 = integrate.quad(lambda u: cost.value(u, y)[0], 0, x)[0]
        rest = integrate.quad(lambda u: cost.value(0.0, u)[1], 0, y)[0]
        u2 = integrate.quad(lambda u: cost.value(x, u)[1], 0, y)[0]
        first = integrate.quad(lambda u: cost.value(u, 0.0)[0], 0, x)[0]
        assert u1 + rest == pytest.approx(edge_potential(cost, x, y), abs=1e-7)
        assert first + u2 == pytest.approx(edge_potential(cost, x, y), abs=1e-7)


def test_gradient_audit_reference():
    game = reference.network_game()
    rng = np.random.default_rng(3)
    f = game.random_flows(rng) + 0.1
    assert np.allclose(potential_gradient(game, f, audit=True, step=1e-4), potential_gradient(game, f),
                       rtol=1e-7, atol=1e-7)


def test_gradient_audit_general():
    g = Graph((0, 1), ((0, 1), (0, 1)))
    game = Game.build(g, [Commodity(0, 1, (1.0, 2.0))], [grad_cost(), grad_cost()])
    f = np.array([[0.4, 1.5], [0.6, 0.5]])
    assert np.allclose(potential_gradient(game, f, audit=True), game.path_costs(f), rtol=1e-6)
    # zero coordinates use the one-sided stencil
    f0 = np.array([[1.0, 2.0], [0.0, 0.0]])
    assert np.allclose(potential_gradient(game, f0, audit=True), game.path_costs(f0), rtol=1e-6)


def test_gradient_at_published_flows():
    game = reference.network_game()
    flows, costs = reference.expected_arrays(game)
    # the published numbers are rounded to two decimals
    assert np.max(np.abs(potential_gradient(game, flows) - costs)) <= 0.05


def test_cross_derivative_mismatch_matches_residual_sum():
    game = series_game(3, -1)
    f = np.array([[0.5, 0.5]])
    assert cross_derivative_mismatch(game, f, 0, 0) == pytest.approx(0.02, abs=1e-9)
    assert cross_derivative_mismatch(series_game(2, -2), f, 0, 0) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_potential_decreases_along_improving_moves(seed):
    """Moving flow from a costlier to a cheaper path changes V by the cost difference to first order."""
    rng = np.random.default_rng(seed)
    game = random_symmetric_game(rng)
    f = game.random_flows(rng)
    costs = game.path_costs(f)
    for k, th, ids in game.blocks:
        if len(ids) < 2:
            continue
        p, q = ids[0], ids[1]
        h = 1e-6 * game.demands[k, th]
        if f[p, th] < h:
            continue
        g = f.copy()
        g[p, th] -= h
        g[q, th] += h
        dv = potential_value(game, g) - potential_value(game, f)
        assert dv == pytest.approx(h * (costs[q, th] - costs[p, th]), rel=1e-3, abs=1e-9)


def type_utility(game, flows, th):
    """Sum over edges of the integral of type th's cost along its own flow, the other type held fixed."""
    phi = game.edge_flows(flows)
    total = 0.0
    for fn, (x, y) in zip(game.cost_functions(True), phi):
        if th == 0:
            total += integrate.quad(lambda u: fn.value(u, y)[0], 0, x, epsrel=1e-12)[0]
        else:
            total += integrate.quad(lambda u: fn.value(x, u)[1], 0, y, epsrel=1e-12)[0]
    return total


@pytest.mark.parametrize("which", ["reference", "general"])
def test_potential_differences_match_type_utilities(which):
    if which == "reference":
        game = reference.network_game()
    else:
        g = Graph((0, 1, 2), ((0, 1), (0, 1), (1, 2), (0, 2)))
        game = Game.build(g, [Commodity(0, 2, (2.0, 1.5))], [grad_cost()] * 4)
    rng = np.random.default_rng(4)
    for _ in range(10):
        a, b = game.random_flows(rng), game.random_flows(rng)
        for th in range(2):
            mixed = a.copy()
            mixed[:, th] = b[:, th]
            dv = potential_value(game, a) - potential_value(game, mixed)
            du = type_utility(game, a, th) - type_utility(game, mixed, th)
            assert dv == pytest.approx(du, rel=1e-7, abs=1e-9)
