from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetroute import reference
from hetroute.costs import AffineEdgeCost, GeneralEdgeCost, cost_jacobian
from hetroute.errors import NotAffine
from hetroute.equilibrium import solve_equilibrium
from hetroute.game import Game
from hetroute.gamefile import load_game
from hetroute.network import Commodity, Graph
from hetroute.potential import Verdict, check_potential_exists
from hetroute.testing import random_asymmetric_game
from hetroute.tolls import (IndistinguishableToll, LinearToll, TollScheme, apply_tolls, construct_tolls,
                            distinguishable_tolls, indistinguishable_tolls, shift_nonnegative,
                            verify_toll_condition)

DATA = Path(__file__).resolve().parents[1] / "src" / "hetroute" / "data"


def single_edge(cost, demand=(1.0, 1.0)):
    return Game.build(Graph((0, 1), ((0, 1),)), [Commodity(0, 1, demand)], [cost])


def skew_general(with_jac=False):
    def fn(x, y):
        return (x * x + 2 * x * y + 1.0, np.sin(x) + x * y + y * y + 2.0)

    def jac(x, y):
        return [[2 * x + 2 * y, 2 * x], [np.cos(x) + y, x + 2 * y]]

    return GeneralEdgeCost(fn, jac if with_jac else None)


@pytest.mark.parametrize("scheme", ["charge_type1", "charge_type2", "indistinguishable"])
def test_platooning_schemes_restore_symmetry(scheme):
    game = load_game(DATA / "platoon.game")
    tolls = construct_tolls(game, scheme)
    assert verify_toll_condition(game, tolls).passed
    tolled = apply_tolls(game, tolls)
    assert check_potential_exists(tolled, mode="edgewise").verdict is Verdict.EDGEWISE
    assert solve_equilibrium(tolled).certificate.epsilon <= 1e-6


def test_opposite_sign_fails():
    game = load_game(DATA / "platoon.game")
    good = distinguishable_tolls(game, "charge_type2")
    flipped = TollScheme(tuple(LinearToll(t.const, -t.coef) for t in good.edges), label="flipped")
    rep = verify_toll_condition(game, flipped)
    assert not rep.passed and rep.failing_edges() == [0, 1, 2]
    assert check_potential_exists(apply_tolls(game, flipped)).verdict is Verdict.ASYMMETRIC


def test_distinguishable_tolls_charge_one_type():
    game = load_game(DATA / "platoon.game")
    t2 = distinguishable_tolls(game, "distinguishable_2")
    t1 = distinguishable_tolls(game, "distinguishable_1")
    for a, b in zip(t2.edges, t1.edges):
        assert np.all(a.coef[0] == 0) and np.all(b.coef[1] == 0)
    assert t2.label == "charge_type2" and not t2.type_independent
    with pytest.raises(ValueError):
        distinguishable_tolls(game, "charge_both")
    with pytest.raises(NotAffine):
        distinguishable_tolls(single_edge(skew_general()))


def test_symmetric_game_needs_no_toll():
    game = reference.network_game()
    for scheme in ("charge_type1", "charge_type2", "indistinguishable"):
        tolls = construct_tolls(game, scheme)
        for t in tolls.edges:
            assert np.all(t.coef == 0) and np.all(t.const == 0)
    c3 = indistinguishable_tolls(game, c=3.0)
    assert c3.label == "indistinguishable-custom"
    for t in c3.edges:
        assert np.array_equal(t.value(2.0, 5.0), [3.0, 3.0])
    with pytest.raises(ValueError):
        indistinguishable_tolls(game, c=-1.0)


def test_single_edge_indistinguishable_example():
    # l1 = phi1 + 2 phi2, l2 = phi1 + phi2 needs tau = -phi2 for both types
    game = single_edge(AffineEdgeCost([[1.0, 2.0], [1.0, 1.0]], [0.0, 0.0]))
    t = indistinguishable_tolls(game).edges[0]
    for x, y in [(0.0, 0.0), (1.0, 2.0), (3.5, 0.25)]:
        assert np.allclose(t.value(x, y), [-y, -y])
    general = IndistinguishableToll(game.costs[0])
    for x, y in [(1.0, 2.0), (3.5, 0.25)]:
        assert general.scalar(x, y) == pytest.approx(-y, abs=1e-12)


def test_general_cost_indistinguishable_tolls():
    cost = skew_general()
    game = single_edge(cost, (2.0, 2.0))
    tolls = indistinguishable_tolls(game)
    assert isinstance(tolls.edges[0], IndistinguishableToll)
    rep = verify_toll_condition(game, tolls, samples=50)
    assert not rep.symbolic and rep.max_residual <= 1e-7
    assert check_potential_exists(apply_tolls(game, tolls), mode="edgewise").verdict is Verdict.EDGEWISE


def test_general_toll_identity_at_points():
    # analytic cost derivatives keep the quadrature smooth, so plain finite
    # differences of the toll value are an independent check
    cost = skew_general(with_jac=True)
    toll = IndistinguishableToll(cost)
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(0, 3, size=(50, 2)):
        jc = cost_jacobian(cost, x, y)
        jt = cost_jacobian(toll, x, y, fd_step=1e-4, analytic=False)
        assert (jt[0, 1] - jt[1, 0]) == pytest.approx(jc[1, 0] - jc[0, 1], abs=1e-7)


def test_custom_psi():
    game = single_edge(AffineEdgeCost([[1.0, 2.0], [1.0, 1.0]], [0.0, 0.0]))
    tolls = indistinguishable_tolls(game, psi=lambda s: s * s, psi_prime=lambda s: 2 * s)
    t = tolls.edges[0]
    assert t.scalar(1.0, 2.0) == pytest.approx(-2.0 + 9.0)
    assert verify_toll_condition(game, tolls).passed


def test_toll_additivity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        game = random_asymmetric_game(rng)
        doubled = game.with_costs([AffineEdgeCost(2 * c.alpha, 2 * c.beta) for c in game.costs])
        for scheme in ("charge_type1", "charge_type2", "indistinguishable"):
            a = construct_tolls(game, scheme)
            b = construct_tolls(doubled, scheme)
            for ta, tb in zip(a.edges, b.edges):
                assert np.allclose(tb.coef, 2 * ta.coef, rtol=1e-14)


def test_shift_nonnegative():
    game = single_edge(AffineEdgeCost([[1.0, 2.0], [1.0, 1.0]], [0.0, 0.0]), (1.0, 2.0))
    shifted = shift_nonnegative(game, indistinguishable_tolls(game))
    t = shifted.edges[0]
    # the toll is -phi2, most negative at phi2 = total demand 3
    assert np.allclose(t.const, 3.0)
    assert shifted.label.endswith("+shift")
    assert verify_toll_condition(game, shifted).passed

    general = single_edge(skew_general(), (1.0, 1.0))
    gs = shift_nonnegative(general, indistinguishable_tolls(general))
    assert gs.edges[0].c > 0
    box = np.linspace(0, 2, 5)
    assert min(gs.edges[0].scalar(x, y) for x in box for y in box) >= -1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_every_scheme_restores_symmetry(seed):
    rng = np.random.default_rng(seed)
    game = random_asymmetric_game(rng)
    for scheme in ("charge_type1", "charge_type2", "indistinguishable"):
        tolls = construct_tolls(game, scheme)
        rep = verify_toll_condition(game, tolls)
        assert rep.max_residual <= 1e-10
        assert check_potential_exists(apply_tolls(game, tolls), mode="edgewise").has_potential
