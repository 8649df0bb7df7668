"""Social cost, the social optimum and the price of anarchy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import SolveOptions, minimize_over_flows, solve_equilibrium
from .errors import BoundViolated, NoPotential, NotAffine
from .potential import check_potential_exists

BOUND = 2.0
BOUND_SLACK = 1e-6
ZERO_COST = 1e-12


def social_cost(game, flows, include_tolls=False):
    """Total cost paid by all users; tolls are transfers and excluded by default."""
    return game.social_cost_edges(game.edge_flows(flows), tolled=include_tolls)


@dataclass
class OptimumResult:
    flows: np.ndarray
    gap: float
    value: float
    converged: bool
    stationary_only: bool
    trace: list

    def __iter__(self):
        return iter((self.flows, self.gap))


def solve_social_optimum(game, opts=None, include_tolls=False, start=None):
    """Minimise the social cost with marginal-cost linearisations.

    The result is a global optimum when the per-edge matrices alpha + alpha^T
    are positive semidefinite; otherwise ``stationary_only`` is set.
    """
    f, trace, converged, gap, val, stationary = minimize_over_flows(
        game, "social", opts or SolveOptions(), include_tolls, start)
    return OptimumResult(f, gap, val, converged, stationary, trace)


@dataclass
class BoundCheck:
    applicable: bool
    asymmetric_edges: list  # edges failing alpha21 == alpha12
    indefinite_edges: list  # edges failing the determinant / diagonal test


def theorem3_applicable(game, include_tolls=False):
    """Hypotheses of the PoA <= 2 bound for affine games.

    Every edge needs equal cross coefficients (relative tolerance 1e-12) and
    alpha11 * alpha22 >= alpha21 * alpha12 with a nonnegative diagonal. The
    cost set inspected is the one the social cost uses.
    """
    if not game.uses_affine(include_tolls):
        raise NotAffine("the bound check needs affine costs")
    alpha, _ = game.affine_arrays(include_tolls)
    asym, indef = [], []
    for e, a in enumerate(alpha):
        scale = max(1.0, float(np.max(np.abs(a))))
        if abs(a[1, 0] - a[0, 1]) > 1e-12 * scale:
            asym.append(e)
        det_ok = a[0, 0] * a[1, 1] - a[1, 0] * a[0, 1] >= -1e-12 * scale * scale
        if not (det_ok and a[0, 0] >= 0 and a[1, 1] >= 0):
            indef.append(e)
    return BoundCheck(not asym and not indef, asym, indef)


@dataclass
class PoAReport:
    cost_at_equilibrium: float
    cost_at_optimum: float
    ratio: float
    bound_applicable: bool
    bound_value: float | None
    zero_over_zero: bool
    equilibrium_gap: float
    optimum_gap: float
    epsilon: float
    equilibrium_flows: np.ndarray
    optimum_flows: np.ndarray
    include_tolls: bool
    converged: bool = True  # both solves met their gap tolerance
    bound_check: BoundCheck | None = None

    def to_dict(self):
        return {
            "cost_at_equilibrium": self.cost_at_equilibrium,
            "cost_at_optimum": self.cost_at_optimum,
            "ratio": self.ratio,
            "ratio_label": "PoA at computed equilibrium",
            "bound_applicable": self.bound_applicable,
            "bound_value": self.bound_value,
            "zero_over_zero": self.zero_over_zero,
            "equilibrium_gap": self.equilibrium_gap,
            "optimum_gap": self.optimum_gap,
            "epsilon": self.epsilon,
            "include_tolls": self.include_tolls,
            "converged": self.converged,
        }


def price_of_anarchy(game, opts=None, include_tolls=False, check_bound=True):
    """Ratio of equilibrium to optimal social cost at the computed equilibrium.

    When both costs are below 1e-12 the ratio is defined as 1. If the bound's
    hypotheses hold and the ratio exceeds 2 + 1e-6, BoundViolated is raised.
    """
    opts = opts or SolveOptions()
    if not check_potential_exists(game).has_potential:
        raise NoPotential("game has no potential; add tolls before computing the price of anarchy")
    eq = solve_equilibrium(game, opts, check=False)
    opt = solve_social_optimum(game, opts, include_tolls)
    c_eq = social_cost(game, eq.flows, include_tolls)
    c_opt = social_cost(game, opt.flows, include_tolls)
    zero = c_eq < ZERO_COST and c_opt < ZERO_COST
    ratio = 1.0 if zero else c_eq / c_opt

    check = None
    applicable = False
    if game.uses_affine(include_tolls):
        check = theorem3_applicable(game, include_tolls)
        applicable = check.applicable
    report = PoAReport(c_eq, c_opt, ratio, applicable, BOUND if applicable else None, zero,
                       eq.gap, opt.gap, eq.certificate.epsilon, eq.flows, opt.flows,
                       include_tolls, eq.converged and opt.converged, check)
    if check_bound and applicable and ratio > BOUND + BOUND_SLACK:
        raise BoundViolated(f"ratio {ratio:.12g} exceeds {BOUND} on a game meeting the bound's hypotheses")
    return report
