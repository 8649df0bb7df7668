"""The compiled loop kernels and the vectorised numpy kernels must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetroute import cli, kernels, reference
from hetroute.equilibrium import brute_force_equilibrium
from hetroute.testing import random_symmetric_game, small_oracle_game

compiled = pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba backend not active")


def sweep_inputs(game, rng):
    alpha, beta = game.affine_arrays()
    f = game.random_flows(rng)
    bp, bl, bt, _ = game.block_arrays
    return f, game.edge_flows(f), alpha, beta, np.ascontiguousarray(game.incidence), bp, bl, bt


def run_sweep(fn, args, marginal):
    f, phi, *rest = args
    f, phi = f.copy(), phi.copy()
    moved = fn(f, phi, *rest, marginal, 0.0)
    return moved, f, phi


@pytest.mark.parametrize("impl", ["loop", pytest.param("compiled", marks=compiled)])
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), marginal=st.booleans())
def test_pairwise_sweep_agrees(impl, seed, marginal):
    rng = np.random.default_rng(seed)
    game = random_symmetric_game(rng, max_nodes=6, max_commodities=3)
    args = sweep_inputs(game, rng)
    fn = kernels._pairwise_sweep_loop if impl == "loop" else kernels.pairwise_sweep
    m1, f1, p1 = run_sweep(fn, args, marginal)
    m2, f2, p2 = run_sweep(kernels.pairwise_sweep_np, args, marginal)
    assert m1 == pytest.approx(m2, rel=1e-12, abs=1e-14)
    assert np.allclose(f1, f2, rtol=1e-12, atol=1e-14)
    assert np.allclose(p1, p2, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("impl", ["loop", pytest.param("compiled", marks=compiled)])
def test_affine_helpers_agree(impl):
    rng = np.random.default_rng(0)
    game = reference.network_game()
    alpha, beta = game.affine_arrays()
    phi = np.ascontiguousarray(game.edge_flows(game.random_flows(rng)))
    costs = kernels._affine_edge_costs_loop if impl == "loop" else kernels.affine_edge_costs
    pot = kernels._affine_potential_loop if impl == "loop" else kernels.affine_potential
    assert np.allclose(costs(phi, alpha, beta), kernels.affine_edge_costs_np(phi, alpha, beta), rtol=1e-14)
    assert pot(phi, alpha, beta) == pytest.approx(kernels.affine_potential_np(phi, alpha, beta), rel=1e-13)


def test_lattice_scan_agrees(monkeypatch):
    rng = np.random.default_rng(1)
    for _ in range(8):
        game = small_oracle_game(rng)
        fast = brute_force_equilibrium(game, 30)
        monkeypatch.setattr(kernels, "lattice_scan", kernels.lattice_scan_np)
        slow = brute_force_equilibrium(game, 30)
        monkeypatch.undo()
        assert np.array_equal(fast.flows, slow.flows)
        assert fast.value == pytest.approx(slow.value, rel=1e-12, abs=1e-12)
        assert fast.eps_certificate.epsilon == pytest.approx(slow.eps_certificate.epsilon, abs=1e-12)


def test_environment_flag_selects_numpy():
    env = dict(os.environ, HETROUTE_DISABLE_NUMBA="1")
    code = ("from hetroute import kernels, cli;"
            "g, eq, *_ = cli.run_reference(); print(kernels.BACKEND, float(eq.value))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = out.stdout.split()
    assert backend == "numpy"
    _, eq, *_ = cli.run_reference()
    assert float(value) == pytest.approx(eq.value, rel=1e-9)
