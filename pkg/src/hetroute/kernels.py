"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled with ``numba.njit`` and a
vectorised numpy version. The numba path is used when numba imports and the
environment variable ``HETROUTE_DISABLE_NUMBA`` is unset (or ``0``). Both paths
take and return identical arrays so callers never branch on the backend.
"""

import os

import numpy as np

_flag = os.environ.get("HETROUTE_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("disabled by HETROUTE_DISABLE_NUMBA")
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"


# ---------------------------------------------------------------------------
# affine edge costs and potential

def affine_edge_costs_np(phi, alpha, beta):
    return np.einsum("eij,ej->ei", alpha, phi) + beta


def affine_potential_np(phi, alpha, beta):
    p1 = phi[:, 0]
    p2 = phi[:, 1]
    # the alpha12*phi1*phi2 terms of the three-integral form cancel
    return float(np.sum(
        0.5 * alpha[:, 0, 0] * p1 * p1 + beta[:, 0] * p1
        + 0.5 * alpha[:, 1, 1] * p2 * p2 + beta[:, 1] * p2
        + alpha[:, 1, 0] * p1 * p2
    ))


def _affine_edge_costs_loop(phi, alpha, beta):
    n = phi.shape[0]
    out = np.empty((n, 2))
    for e in range(n):
        for i in range(2):
            out[e, i] = alpha[e, i, 0] * phi[e, 0] + alpha[e, i, 1] * phi[e, 1] + beta[e, i]
    return out


def _affine_potential_loop(phi, alpha, beta):
    total = 0.0
    for e in range(phi.shape[0]):
        p1 = phi[e, 0]
        p2 = phi[e, 1]
        total += (0.5 * alpha[e, 0, 0] * p1 * p1 + beta[e, 0] * p1
                  + 0.5 * alpha[e, 1, 1] * p2 * p2 + beta[e, 1] * p2
                  + alpha[e, 1, 0] * p1 * p2)
    return total


# ---------------------------------------------------------------------------
# pairwise path-swap sweep for affine games
#
# One sweep visits every (commodity, type) block once and moves flow from the
# most expensive used path to the cheapest path with an exact line search on
# the quadratic objective. With ``marginal`` false the gradient is the path
# cost (potential); with it true, the marginal social cost l + J^T phi.

def _block_gradient_np(phi, alpha, beta, incidence, paths, theta, marginal):
    cost = np.einsum("eij,ej->ei", alpha, phi) + beta
    if marginal:
        cost = cost + np.einsum("eji,ej->ei", alpha, phi)
    return incidence[:, paths].T @ cost[:, theta]


def pairwise_sweep_np(flows, phi, alpha, beta, incidence, block_paths, block_len,
                      block_type, marginal, used_tol):
    moved = 0.0
    for b in range(block_paths.shape[0]):
        n = block_len[b]
        if n < 2:
            continue
        paths = block_paths[b, :n]
        theta = block_type[b]
        g = _block_gradient_np(phi, alpha, beta, incidence, paths, theta, marginal)
        f = flows[paths, theta]
        s = int(np.argmin(g))
        used = np.flatnonzero(f > used_tol)
        if used.size == 0:
            continue
        a = int(used[np.argmax(g[used])])
        if a == s:
            continue
        slope = g[a] - g[s]
        if slope <= 0.0:
            continue
        d = incidence[:, paths[s]] - incidence[:, paths[a]]
        curv = np.sum(d * d * alpha[:, theta, theta])
        if marginal:
            curv *= 2.0
        xmax = f[a]
        x = xmax if curv <= 0.0 else min(xmax, slope / curv)
        flows[paths[s], theta] += x
        flows[paths[a], theta] -= x
        if x == xmax:
            flows[paths[a], theta] = 0.0
        phi[:, theta] += x * d
        moved += x
    return moved


def _pairwise_sweep_loop(flows, phi, alpha, beta, incidence, block_paths, block_len,
                         block_type, marginal, used_tol):
    n_edges = phi.shape[0]
    moved = 0.0
    cost = np.empty(n_edges)
    for b in range(block_paths.shape[0]):
        n = block_len[b]
        if n < 2:
            continue
        theta = block_type[b]
        other = 1 - theta
        for e in range(n_edges):
            c = alpha[e, theta, theta] * phi[e, theta] + alpha[e, theta, other] * phi[e, other] + beta[e, theta]
            if marginal:
                c += alpha[e, theta, theta] * phi[e, theta] + alpha[e, other, theta] * phi[e, other]
            cost[e] = c
        best = 0
        best_g = np.inf
        away = -1
        away_g = -np.inf
        for j in range(n):
            p = block_paths[b, j]
            g = 0.0
            for e in range(n_edges):
                if incidence[e, p] != 0.0:
                    g += cost[e]
            if g < best_g:
                best_g = g
                best = j
            if flows[p, theta] > used_tol and g > away_g:
                away_g = g
                away = j
        if away < 0 or away == best:
            continue
        slope = away_g - best_g
        if slope <= 0.0:
            continue
        ps = block_paths[b, best]
        pa = block_paths[b, away]
        curv = 0.0
        for e in range(n_edges):
            d = incidence[e, ps] - incidence[e, pa]
            curv += d * d * alpha[e, theta, theta]
        if marginal:
            curv *= 2.0
        xmax = flows[pa, theta]
        if curv <= 0.0:
            x = xmax
        else:
            x = min(xmax, slope / curv)
        flows[ps, theta] += x
        flows[pa, theta] -= x
        if x == xmax:
            flows[pa, theta] = 0.0
        for e in range(n_edges):
            phi[e, theta] += x * (incidence[e, ps] - incidence[e, pa])
        moved += x
    return moved


# ---------------------------------------------------------------------------
# brute-force lattice scan
#
# ``contrib[b]`` holds, for every lattice point of block b, its edge-flow
# contribution (only the block's type column is nonzero). Points are visited in
# mixed-radix order with block 0 most significant; the first strict minimum
# wins, which is the lexicographically smallest minimiser.

def lattice_scan_np(contrib_flat, contrib_off, radix, block_type, path_edges_mat,
                    flows_flat, flows_off, block_paths, block_len,
                    alpha, beta, used_tol, chunk=1 << 18):
    # V is quadratic and path costs are linear in the per-block contributions,
    # so both are assembled from small per-block and per-block-pair tables
    # instead of re-evaluating every edge at every lattice point.
    nb = radix.shape[0]
    total = int(np.prod(radix)) if nb else 1
    xs = [contrib_flat[contrib_off[b]:contrib_off[b] + radix[b]] for b in range(nb)]
    self_v = []
    paths_part = []
    for b in range(nb):
        th = block_type[b]
        x = xs[b]
        self_v.append(x * x @ (0.5 * alpha[:, th, th]) + x @ beta[:, th])
        # contribution to the path costs of both types: (points, paths, 2)
        paths_part.append(np.einsum("me,pe,ei->mpi", x, path_edges_mat, alpha[:, :, th]))
    cross = {}
    for b in range(nb):
        for c in range(b + 1, nb):
            tb, tc = block_type[b], block_type[c]
            w = alpha[:, tb, tb] if tb == tc else alpha[:, 1, 0]
            cross[b, c] = (xs[b] * w) @ xs[c].T
    base_pc = path_edges_mat @ beta

    best_v = np.inf
    best_v_idx = 0
    best_eps = np.inf
    best_eps_idx = 0
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        lin = np.arange(start, stop, dtype=np.int64)
        m = lin.size
        rem = lin.copy()
        idx = np.empty((nb, m), dtype=np.int64)
        for b in range(nb - 1, -1, -1):
            idx[b] = rem % radix[b]
            rem //= radix[b]
        v = np.zeros(m)
        pc = np.broadcast_to(base_pc, (m,) + base_pc.shape).copy()
        for b in range(nb):
            v += self_v[b][idx[b]]
            pc += paths_part[b][idx[b]]
            for c in range(b + 1, nb):
                v += cross[b, c][idx[b], idx[c]]
        eps = np.zeros(m)
        for b in range(nb):
            n = block_len[b]
            th = block_type[b]
            c = pc[:, block_paths[b, :n], th]
            f = flows_flat[flows_off[b] + idx[b], :n]
            used_max = np.where(f > used_tol, c, -np.inf).max(axis=1)
            e = np.maximum(used_max - c.min(axis=1), 0.0)
            e[~np.isfinite(used_max)] = 0.0
            eps = np.maximum(eps, e)
        i = int(np.argmin(v))
        if v[i] < best_v:
            best_v = float(v[i])
            best_v_idx = start + i
        j = int(np.argmin(eps))
        if eps[j] < best_eps:
            best_eps = float(eps[j])
            best_eps_idx = start + j
    return best_v_idx, best_v, best_eps_idx, best_eps


def _lattice_scan_loop(contrib_flat, contrib_off, radix, block_type, path_edges_mat,
                       flows_flat, flows_off, block_paths, block_len,
                       alpha, beta, used_tol):
    nb = radix.shape[0]
    n_edges = alpha.shape[0]
    n_paths = path_edges_mat.shape[0]
    total = 1
    for b in range(nb):
        total *= radix[b]
    idx = np.zeros(nb, dtype=np.int64)
    phi = np.zeros((n_edges, 2))
    cost = np.empty((n_edges, 2))
    pc = np.empty((n_paths, 2))
    best_v = np.inf
    best_v_idx = 0
    best_eps = np.inf
    best_eps_idx = 0
    for lin in range(total):
        if lin > 0:
            b = nb - 1
            while True:
                idx[b] += 1
                if idx[b] < radix[b]:
                    break
                idx[b] = 0
                b -= 1
        for e in range(n_edges):
            phi[e, 0] = 0.0
            phi[e, 1] = 0.0
        for b in range(nb):
            th = block_type[b]
            row = contrib_off[b] + idx[b]
            for e in range(n_edges):
                phi[e, th] += contrib_flat[row, e]
        v = 0.0
        for e in range(n_edges):
            p1 = phi[e, 0]
            p2 = phi[e, 1]
            v += (0.5 * alpha[e, 0, 0] * p1 * p1 + beta[e, 0] * p1
                  + 0.5 * alpha[e, 1, 1] * p2 * p2 + beta[e, 1] * p2
                  + alpha[e, 1, 0] * p1 * p2)
            cost[e, 0] = alpha[e, 0, 0] * p1 + alpha[e, 0, 1] * p2 + beta[e, 0]
            cost[e, 1] = alpha[e, 1, 0] * p1 + alpha[e, 1, 1] * p2 + beta[e, 1]
        if v < best_v:
            best_v = v
            best_v_idx = lin
        for p in range(n_paths):
            pc[p, 0] = 0.0
            pc[p, 1] = 0.0
            for e in range(n_edges):
                if path_edges_mat[p, e] != 0.0:
                    pc[p, 0] += cost[e, 0]
                    pc[p, 1] += cost[e, 1]
        eps = 0.0
        for b in range(nb):
            th = block_type[b]
            row = flows_off[b] + idx[b]
            lo = np.inf
            hi = -np.inf
            for j in range(block_len[b]):
                c = pc[block_paths[b, j], th]
                if c < lo:
                    lo = c
                if flows_flat[row, j] > used_tol and c > hi:
                    hi = c
            if hi > -np.inf and hi - lo > eps:
                eps = hi - lo
        if eps < best_eps:
            best_eps = eps
            best_eps_idx = lin
    return best_v_idx, best_v, best_eps_idx, best_eps


if NUMBA_AVAILABLE:
    affine_edge_costs = njit(cache=True)(_affine_edge_costs_loop)
    affine_potential = njit(cache=True)(_affine_potential_loop)
    pairwise_sweep = njit(cache=True)(_pairwise_sweep_loop)
    lattice_scan = njit(cache=True)(_lattice_scan_loop)
else:
    affine_edge_costs = affine_edge_costs_np
    affine_potential = affine_potential_np
    pairwise_sweep = pairwise_sweep_np
    lattice_scan = lattice_scan_np
