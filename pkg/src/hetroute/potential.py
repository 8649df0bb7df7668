"""Cross-derivative symmetry test and the potential function V.

For edge costs l1(phi1, phi2), l2(phi1, phi2) the residual
r = dl2/dphi1 - dl1/dphi2 measures how far an edge is from admitting a
potential. A game has a potential iff, for every pair of paths p, q, the
residuals summed over the shared edges of p and q vanish.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .costs import cost_jacobian
from .network import as_flow_vector

PAIR_WARNING_LIMIT = 1_000_000
QUAD_EPSREL = 1e-11


class Verdict(str, enum.Enum):
    EDGEWISE = "EdgewiseSymmetric"
    PATHWISE = "PathwiseSymmetric"
    ASYMMETRIC = "Asymmetric"

    @property
    def has_potential(self):
        return self is not Verdict.ASYMMETRIC


@dataclass
class SymmetryReport:
    verdict: Verdict
    edge_residuals: np.ndarray  # (E,) max |r_e| over the samples
    pair_sums: np.ndarray  # (P, P) max |sum of r_e over shared edges|
    max_residual: float
    max_pair_sum: float
    tol: float
    mode: str
    symbolic: bool
    signed_residuals: np.ndarray = None  # (E,) r_e for affine games

    @property
    def has_potential(self):
        return self.verdict.has_potential

    def failing_edges(self):
        return [int(e) for e in np.flatnonzero(self.edge_residuals > self.tol)]

    def failing_pairs(self):
        p, q = np.nonzero(np.triu(self.pair_sums > self.tol))
        return [(int(a), int(b)) for a, b in zip(p, q)]


def symmetry_residual(fn, phi1, phi2, fd_step=None):
    jac = cost_jacobian(fn, phi1, phi2, fd_step)
    return float(jac[1, 0] - jac[0, 1])


def default_tolerance(jac_scale):
    return 1e-8 * (1.0 + jac_scale)


def _pair_sums(incidence, r):
    return incidence.T @ (r[:, None] * incidence)


def _sample_points(box, rng, grid=5, n_random=20):
    g = np.linspace(0.0, box, grid)
    pts = [(x, y) for x in g for y in g]
    pts += [tuple(p) for p in rng.uniform(0.0, box, size=(n_random, 2))]
    return pts


def check_potential_exists(game, mode="pathwise", samples=None, tol=None, tolled=True, seed=0):
    """Decide whether ``game`` admits a potential.

    ``mode="edgewise"`` only accepts games whose every edge is symmetric;
    ``mode="pathwise"`` also accepts residuals that cancel across path pairs.
    Affine games are decided from their coefficients. Otherwise residuals are
    sampled: ``samples`` is the number of random path-flow vectors for the
    pathwise test (default 20); the edgewise test uses a 5x5 grid plus 20
    random points over ``[0, total demand]^2`` on every edge.
    """
    if mode not in ("edgewise", "pathwise"):
        raise ValueError(f"unknown mode {mode!r}")
    inc = game.incidence
    n_pairs = game.n_paths ** 2
    if mode == "pathwise" and n_pairs > PAIR_WARNING_LIMIT:
        warnings.warn(f"checking {n_pairs} path pairs", RuntimeWarning, stacklevel=2)

    if game.uses_affine(tolled):
        alpha, _ = game.affine_arrays(tolled)
        r = alpha[:, 1, 0] - alpha[:, 0, 1]
        if tol is None:
            tol = default_tolerance(float(np.max(np.abs(alpha), initial=0.0)))
        edge_res = np.abs(r)
        pair = np.abs(_pair_sums(inc, r)) if mode == "pathwise" else np.zeros((0, 0))
        symbolic = True
        signed = r
    else:
        rng = np.random.default_rng(seed)
        fns = game.cost_functions(tolled)
        box = max(1.0, float(game.demands.sum()))
        pts = _sample_points(box, rng)
        edge_res = np.zeros(game.n_edges)
        jac_scale = 0.0
        for e, fn in enumerate(fns):
            for x, y in pts:
                jac = cost_jacobian(fn, x, y)
                jac_scale = max(jac_scale, float(np.max(np.abs(jac))))
                edge_res[e] = max(edge_res[e], abs(jac[1, 0] - jac[0, 1]))
        pair = np.zeros((game.n_paths, game.n_paths))
        if mode == "pathwise":
            n = 20 if samples is None else samples
            flows = [np.zeros((game.n_paths, 2)), game.uniform_flows()]
            flows += [game.random_flows(rng) for _ in range(max(n - 2, 0))]
            for f in flows:
                jacs = game.edge_jacobians(game.edge_flows(f), tolled)
                jac_scale = max(jac_scale, float(np.max(np.abs(jacs), initial=0.0)))
                r = jacs[:, 1, 0] - jacs[:, 0, 1]
                pair = np.maximum(pair, np.abs(_pair_sums(inc, r)))
        if tol is None:
            tol = default_tolerance(jac_scale)
        symbolic = False
        signed = None

    max_res = float(edge_res.max(initial=0.0))
    max_pair = float(pair.max(initial=0.0))
    if max_res <= tol:
        verdict = Verdict.EDGEWISE
    elif mode == "pathwise" and max_pair <= tol:
        verdict = Verdict.PATHWISE
    else:
        verdict = Verdict.ASYMMETRIC
    return SymmetryReport(verdict, edge_res, pair, max_res, max_pair, float(tol), mode, symbolic, signed)


# ---------------------------------------------------------------------------
# potential value and gradient

def edge_potential(fn, phi1, phi2):
    """V_e for one edge by quadrature.

    The double integral of dl1/dphi2 collapses to a single integral of
    l1(u, phi2) - l1(u, 0), which leaves
    V_e = int_0^phi1 l1(u, 0) du + int_0^phi2 l2(phi1, u) du.
    """
    first = 0.0
    second = 0.0
    if phi1 > 0:
        first = integrate.quad(lambda u: fn.value(u, 0.0)[0], 0.0, phi1,
                               epsabs=1e-14, epsrel=QUAD_EPSREL, limit=200)[0]
    if phi2 > 0:
        second = integrate.quad(lambda u: fn.value(phi1, u)[1], 0.0, phi2,
                                epsabs=1e-14, epsrel=QUAD_EPSREL, limit=200)[0]
    return first + second


def potential_from_edge_flows(game, phi, tolled=True):
    if game.uses_affine(tolled):
        alpha, beta = game.affine_arrays(tolled)
        return float(kernels.affine_potential(np.ascontiguousarray(phi, dtype=float), alpha, beta))
    fns = game.cost_functions(tolled)
    return float(sum(edge_potential(fn, phi[e, 0], phi[e, 1]) for e, fn in enumerate(fns)))


def potential_value(game, flows, tolled=True):
    """V at ``flows``. Tolled games use cost plus toll."""
    return potential_from_edge_flows(game, game.edge_flows(flows), tolled)


def potential_gradient(game, flows, audit=False, tolled=True, step=None):
    """dV/df as a ``(P, 2)`` array.

    Under symmetry this equals the path costs, which is what is returned by
    default. ``audit=True`` instead differentiates ``potential_value``
    numerically (central differences, one-sided at zero flow).
    """
    f = as_flow_vector(flows, game.n_paths)
    if not audit:
        return game.path_costs(f, tolled)
    grad = np.zeros_like(f)
    for p in range(game.n_paths):
        for th in range(2):
            h = step if step is not None else 1e-6 * max(1.0, abs(f[p, th]))
            up = f.copy()
            up[p, th] += h
            if f[p, th] - h >= 0 or game.uses_affine(tolled):
                dn = f.copy()
                dn[p, th] -= h
                grad[p, th] = (potential_value(game, up, tolled) - potential_value(game, dn, tolled)) / (2 * h)
            else:
                up2 = f.copy()
                up2[p, th] += 2 * h
                v0 = potential_value(game, f, tolled)
                grad[p, th] = (-3 * v0 + 4 * potential_value(game, up, tolled)
                               - potential_value(game, up2, tolled)) / (2 * h)
    return grad


def cross_derivative_mismatch(game, flows, p, q, step=1e-4, tolled=True):
    """d l_q^(2) / d f_p^(1) minus d l_p^(1) / d f_q^(2) by central differences.

    A potential must have a symmetric Hessian, so these two mixed derivatives
    of a candidate potential (whose gradient is the path-cost field) have to
    agree. Their difference equals the residual sum over the edges shared by
    ``p`` and ``q``.
    """
    f = as_flow_vector(flows, game.n_paths)

    def shifted(path, th, h):
        g = f.copy()
        g[path, th] += h
        return game.path_costs(g, tolled)

    d_q2_p1 = (shifted(p, 0, step)[q, 1] - shifted(p, 0, -step)[q, 1]) / (2 * step)
    d_p1_q2 = (shifted(q, 1, step)[p, 0] - shifted(q, 1, -step)[p, 0]) / (2 * step)
    return float(d_q2_p1 - d_p1_q2)
