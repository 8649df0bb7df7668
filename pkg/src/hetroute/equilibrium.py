"""Equilibrium computation by conditional-gradient minimisation of V.

The linear subproblem over the flow polytope splits into one all-or-nothing
assignment per (commodity, type) block, so no projection is ever needed. Two
variants share that oracle and the stopping rule:

* ``pairwise`` (default) moves flow inside each block from the most expensive
  used path to the cheapest path, with an exact line search. One iteration is
  one sweep over all blocks.
* ``classic`` moves the whole iterate toward the all-or-nothing vertex, with an
  exact line search or the harmonic step 2/(t+2).

Both stop once the Frank-Wolfe gap <grad, f - s> drops below
``gap_tol * max(1, |objective|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .errors import Infeasible, InfeasibleFlows, NoPotential, NotAffine, TooLarge
from .network import as_flow_vector, validate_feasible
from .potential import check_potential_exists, potential_from_edge_flows

STEP_RULES = ("exact_line_search", "harmonic")
VARIANTS = ("pairwise", "classic")
BRUTE_FORCE_MAX_POINTS = 10_000_000
BRUTE_FORCE_MAX_PATHS = 6


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 20_000
    gap_tol: float = 1e-8
    step_rule: str = "exact_line_search"
    seed: int | None = None
    variant: str = "pairwise"

    def __post_init__(self):
        if not self.gap_tol > 0:
            raise ValueError("gap_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.step_rule == "harmonic" and self.variant != "classic":
            raise ValueError("the harmonic step rule requires variant='classic'")


@dataclass
class NashCertificate:
    epsilon: float
    worst: tuple | None  # (commodity, type, used path, better path, cost gap)
    blocks: list = field(default_factory=list)  # (commodity, type, min used, max used, min any)
    used_flow_threshold: float = 0.0
    stationary_only: bool = False

    @property
    def exact(self):
        return self.epsilon == 0.0


@dataclass
class SolveResult:
    flows: np.ndarray
    certificate: NashCertificate
    trace: list  # (iteration, objective, gap)
    converged: bool
    gap: float
    value: float
    stationary_only: bool

    @property
    def iterations(self):
        return len(self.trace)

    def __iter__(self):
        return iter((self.flows, self.certificate, self.trace))


# ---------------------------------------------------------------------------
# shared conditional-gradient engine

def _fw_gap(game, grad, f):
    gap = 0.0
    for k, th, ids in game.blocks:
        g = grad[ids, th]
        gap += float(g @ f[ids, th] - game.demands[k, th] * g.min())
    return max(gap, 0.0)


def _vertex(game, grad):
    s = np.zeros((game.n_paths, 2))
    for k, th, ids in game.blocks:
        s[ids[int(np.argmin(grad[ids, th]))], th] = game.demands[k, th]
    return s


def _affine_convex(game, kind, tolled):
    alpha, _ = game.affine_arrays(tolled)
    if kind == "potential":
        hess = alpha.copy()
        hess[:, 0, 1] = alpha[:, 1, 0]
    else:
        hess = alpha + np.transpose(alpha, (0, 2, 1))
    if hess.shape[0] == 0:
        return True
    eig = np.linalg.eigvalsh(hess)
    scale = max(1.0, float(np.max(np.abs(hess))))
    return bool(np.all(eig >= -1e-12 * scale))


def _line_search(h, xmax):
    """Minimise along a segment given its directional derivative ``h``."""
    h0 = h(0.0)
    if h0 >= 0.0:
        return 0.0
    hmax = h(xmax)
    if hmax <= 0.0:
        return xmax
    return optimize.brentq(h, 0.0, xmax, xtol=1e-15 * max(1.0, xmax), rtol=1e-15)


def _start(game, opts, start):
    if start is not None:
        return np.array(as_flow_vector(start, game.n_paths), dtype=float)
    if opts.seed is None:
        return game.uniform_flows()
    return game.random_flows(np.random.default_rng(opts.seed))


def minimize_over_flows(game, kind, opts=None, tolled=True, start=None):
    """Minimise V (``kind="potential"``) or the social cost (``kind="social"``).

    Returns ``(flows, trace, converged, gap, value, stationary_only)``.
    """
    opts = opts or SolveOptions()
    for k, th, ids in game.blocks:
        if len(ids) == 0:
            raise Infeasible(f"commodity {k} has demand but no paths")
    if kind == "potential":
        def value(phi):
            return potential_from_edge_flows(game, phi, tolled)

        def gradient(f):
            return game.path_costs(f, tolled)
    elif kind == "social":
        def value(phi):
            return game.social_cost_edges(phi, tolled)

        def gradient(f):
            return game.marginal_path_costs(f, tolled)
    else:
        raise ValueError(kind)

    affine = game.uses_affine(tolled)
    stationary_only = not (affine and _affine_convex(game, kind, tolled))
    f = _start(game, opts, start)
    inc = game.incidence
    trace = []
    converged = False
    gap = 0.0
    val = value(inc @ f)
    if affine:
        alpha, beta = game.affine_arrays(tolled)
        bp, bl, bt, _ = game.block_arrays
    for it in range(opts.max_iters):
        phi = inc @ f
        grad = gradient(f)
        gap = _fw_gap(game, grad, f)
        val = value(phi)
        trace.append((it, val, gap))
        if gap <= opts.gap_tol * max(1.0, abs(val)):
            converged = True
            break
        if opts.variant == "pairwise":
            if affine:
                moved = kernels.pairwise_sweep(f, np.ascontiguousarray(phi), alpha, beta, inc,
                                               bp, bl, bt, kind == "social", 0.0)
            else:
                moved = _pairwise_sweep_general(game, f, gradient)
            if moved == 0.0:
                break
        else:
            d = _vertex(game, grad) - f
            if opts.step_rule == "harmonic":
                step = 2.0 / (it + 2.0)
            elif affine:
                h0 = float(np.sum(grad * d))
                h1 = float(np.sum(gradient(f + d) * d))
                step = 1.0 if h1 <= 0.0 else min(1.0, -h0 / (h1 - h0))
            else:
                step = _line_search(lambda x: float(np.sum(gradient(f + x * d) * d)), 1.0)
            f = np.maximum(f + step * d, 0.0)
    return f, trace, converged, gap, val, stationary_only


def _pairwise_sweep_general(game, f, gradient):
    moved = 0.0
    for k, th, ids in game.blocks:
        if len(ids) < 2:
            continue
        g = gradient(f)[ids, th]
        fb = f[ids, th]
        s = int(np.argmin(g))
        used = np.flatnonzero(fb > 0.0)
        if used.size == 0:
            continue
        a = int(used[np.argmax(g[used])])
        if a == s or g[a] <= g[s]:
            continue
        d = np.zeros_like(f)
        d[ids[s], th] = 1.0
        d[ids[a], th] = -1.0
        xmax = fb[a]
        x = _line_search(lambda x: float(np.sum(gradient(f + x * d) * d)), xmax)
        f[ids[s], th] += x
        f[ids[a], th] = 0.0 if x == xmax else f[ids[a], th] - x
        moved += x
    return moved


# ---------------------------------------------------------------------------
# equilibrium and its certificate

def default_used_threshold(game):
    return 1e-7 * float(game.demands.max(initial=0.0))


def nash_certificate(game, flows, used_flow_threshold=None, tolled=True):
    """Epsilon of ``flows`` without a feasibility check."""
    f = as_flow_vector(flows, game.n_paths)
    thr = default_used_threshold(game) if used_flow_threshold is None else used_flow_threshold
    costs = game.path_costs(f, tolled)
    eps = 0.0
    worst = None
    blocks = []
    for k, th, ids in game.blocks:
        c = costs[ids, th]
        used = np.flatnonzero(f[ids, th] > thr)
        best = int(np.argmin(c))
        if used.size == 0:
            blocks.append((k, th, math.nan, math.nan, float(c[best])))
            continue
        hi = int(used[np.argmax(c[used])])
        lo_used = float(c[used].min())
        gap = max(float(c[hi] - c[best]), 0.0)
        blocks.append((k, th, lo_used, float(c[hi]), float(c[best])))
        if gap > eps:
            eps = gap
            worst = (k, th, int(ids[hi]), int(ids[best]), gap)
    return NashCertificate(eps, worst, blocks, thr)


def verify_nash(game, flows, used_flow_threshold=None, feas_tol=1e-9, tolled=True):
    """Check the equilibrium conditions directly.

    For every (commodity, type) block the contribution is the largest cost of
    a used path minus the cheapest cost in the block, clamped at zero.
    ``feas_tol`` is the relative demand tolerance; raise it for flows that
    were printed at limited precision.
    """
    report = validate_feasible(flows, game.commodities, game.paths, rel_tol=feas_tol)
    if not report.feasible:
        raise InfeasibleFlows(
            f"flows are infeasible (max demand violation {report.max_violation:.3g}, "
            f"{len(report.negative)} negative entries)")
    return nash_certificate(game, flows, used_flow_threshold, tolled)


def solve_equilibrium(game, opts=None, start=None, check=True):
    """Equilibrium flows of ``game`` (tolled costs when it carries tolls)."""
    opts = opts or SolveOptions()
    if check:
        report = check_potential_exists(game, mode="pathwise")
        if not report.has_potential:
            raise NoPotential(
                f"cost cross-derivatives are asymmetric (max residual {report.max_residual:.3g}); "
                "apply a toll scheme from hetroute.tolls first")
    f, trace, converged, gap, val, stationary = minimize_over_flows(game, "potential", opts, True, start)
    cert = nash_certificate(game, f)
    cert.stationary_only = stationary
    return SolveResult(f, cert, trace, converged, gap, val, stationary)


# ---------------------------------------------------------------------------
# exhaustive lattice oracle

def _compositions(total, parts):
    """All tuples of ``parts`` nonnegative ints summing to ``total``, lex ascending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class BruteForceResult:
    flows: np.ndarray  # V-minimising lattice point (epsilon-minimising when no potential)
    certificate: NashCertificate
    value: float
    eps_flows: np.ndarray
    eps_certificate: NashCertificate
    grid_points: int
    has_potential: bool

    def __iter__(self):
        return iter((self.flows, self.certificate))


def lattice_size(game, grid_steps):
    return math.prod(math.comb(grid_steps + len(ids) - 1, len(ids) - 1) for _, _, ids in game.blocks)


def brute_force_equilibrium(game, grid_steps):
    """Scan every lattice point with resolution demand / grid_steps per block.

    Affine games only. Ties go to the first point in scan order, which visits
    blocks as mixed-radix digits (first block most significant) and each
    block's compositions in ascending lexicographic order.
    """
    if grid_steps < 1:
        raise ValueError("grid_steps must be positive")
    if not game.is_affine:
        raise NotAffine("the lattice oracle needs affine costs")
    if game.n_paths > BRUTE_FORCE_MAX_PATHS:
        raise TooLarge(f"{game.n_paths} paths exceed the limit of {BRUTE_FORCE_MAX_PATHS}")
    size = lattice_size(game, grid_steps)
    if size > BRUTE_FORCE_MAX_POINTS:
        raise TooLarge(f"{size} lattice points exceed the limit of {BRUTE_FORCE_MAX_POINTS}")
    alpha, beta = game.affine_arrays(True)
    inc = game.incidence
    bp, bl, bt, bd = game.block_arrays
    width = bp.shape[1]
    contrib, flows_rows, radix, c_off, f_off = [], [], [], [], []
    offset = 0
    for b, (k, th, ids) in enumerate(game.blocks):
        comps = np.array(list(_compositions(grid_steps, len(ids))), dtype=float)
        pts = comps * (bd[b] / grid_steps)
        padded = np.zeros((len(pts), width))
        padded[:, :len(ids)] = pts
        flows_rows.append(padded)
        contrib.append(pts @ inc[:, ids].T)
        radix.append(len(pts))
        c_off.append(offset)
        f_off.append(offset)
        offset += len(pts)
    n_edges = game.n_edges
    contrib_flat = np.vstack(contrib) if contrib else np.zeros((0, n_edges))
    flows_flat = np.vstack(flows_rows) if flows_rows else np.zeros((0, width))
    radix = np.array(radix, dtype=np.int64)
    off = np.array(c_off, dtype=np.int64)
    path_edges = np.ascontiguousarray(inc.T)
    iv, bv, ie, be = kernels.lattice_scan(
        np.ascontiguousarray(contrib_flat), off, radix, bt, path_edges,
        np.ascontiguousarray(flows_flat), np.array(f_off, dtype=np.int64), bp, bl,
        alpha, beta, 0.0)

    def decode(lin):
        f = np.zeros((game.n_paths, 2))
        rem = int(lin)
        digits = [0] * len(radix)
        for b in range(len(radix) - 1, -1, -1):
            digits[b] = rem % int(radix[b])
            rem //= int(radix[b])
        for b, (k, th, ids) in enumerate(game.blocks):
            f[ids, th] = flows_flat[off[b] + digits[b], :len(ids)]
        return f

    has_potential = check_potential_exists(game).has_potential
    fe = decode(ie)
    cert_e = nash_certificate(game, fe, used_flow_threshold=0.0)
    if has_potential:
        fv = decode(iv)
        cert_v = nash_certificate(game, fv, used_flow_threshold=0.0)
    else:
        fv, cert_v = fe, cert_e
    return BruteForceResult(fv, cert_v, float(bv), fe, cert_e, size, has_potential)
