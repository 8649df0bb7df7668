"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once untimed so numba compilation is excluded. Prints the
best wall time per backend and the speedup.
"""

import argparse
import time

import numpy as np

from hetroute import kernels, reference
from hetroute.equilibrium import SolveOptions, brute_force_equilibrium, minimize_over_flows
from hetroute.testing import random_symmetric_game, small_oracle_game


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sweep_case(rng, n_sweeps=200):
    game = random_symmetric_game(rng, max_nodes=8, max_commodities=4)
    alpha, beta = game.affine_arrays()
    inc = np.ascontiguousarray(game.incidence)
    bp, bl, bt, _ = game.block_arrays
    f0 = game.random_flows(rng)
    phi0 = game.edge_flows(f0)

    def run(fn):
        def go():
            f, phi = f0.copy(), phi0.copy()
            for _ in range(n_sweeps):
                fn(f, phi, alpha, beta, inc, bp, bl, bt, False, 0.0)
        return go

    return f"pairwise sweep x{n_sweeps} ({game.n_paths} paths, {game.n_edges} edges)", run


def lattice_case(rng, grid=120):
    game = small_oracle_game(rng)
    while game.n_paths < 4:
        game = small_oracle_game(rng)

    def run(fn):
        def go():
            saved = kernels.lattice_scan
            kernels.lattice_scan = fn
            try:
                brute_force_equilibrium(game, grid)
            finally:
                kernels.lattice_scan = saved
        return go

    return f"lattice scan, grid {grid} ({game.n_paths} paths)", run


def solve_case(rng):
    game = reference.network_game()
    opts = SolveOptions(gap_tol=1e-10)

    def run(fn):
        def go():
            saved = kernels.pairwise_sweep
            kernels.pairwise_sweep = fn
            try:
                minimize_over_flows(game, "potential", opts)
            finally:
                kernels.pairwise_sweep = saved
        return go

    return f"reference instance solve to gap 1e-10 ({game.n_paths} paths)", run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if not kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba backend is disabled or missing; nothing to compare")

    rng = np.random.default_rng(args.seed)
    cases = [
        (sweep_case(rng), kernels.pairwise_sweep, kernels.pairwise_sweep_np),
        (lattice_case(rng), kernels.lattice_scan, kernels.lattice_scan_np),
        (solve_case(rng), kernels.pairwise_sweep, kernels.pairwise_sweep_np),
    ]
    print(f"{'case':55s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for (label, make), fast, slow in cases:
        t_fast = best_of(make(fast), args.repeat)
        t_slow = best_of(make(slow), args.repeat)
        print(f"{label:55s} {t_fast:10.4f} {t_slow:10.4f} {t_slow / t_fast:8.1f}")


if __name__ == "__main__":
    main()
