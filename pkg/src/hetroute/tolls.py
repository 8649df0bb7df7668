"""Toll schemes that make a game's cost cross-derivatives symmetric.

A scheme adds tau_e^theta(phi1, phi2) to each edge cost. The tolled game has a
potential when, on every edge,

    d tau1/d phi2 - d tau2/d phi1 = d l2/d phi1 - d l1/d phi2.

Distinguishable schemes charge one type only; indistinguishable schemes charge
both types the same amount and are built by integrating the residual.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .costs import EdgeCost, cost_jacobian
from .errors import NotAffine

STRATEGY_ALIASES = {
    "charge_type1": "charge_type1",
    "charge_type2": "charge_type2",
    "distinguishable_1": "charge_type1",
    "distinguishable_2": "charge_type2",
}


@dataclass(eq=False)
class LinearToll(EdgeCost):
    """tau_i = const[i] + coef[i, 0] * phi1 + coef[i, 1] * phi2."""

    const: np.ndarray
    coef: np.ndarray

    def __post_init__(self):
        self.const = np.array(self.const, dtype=float).reshape(2)
        self.coef = np.array(self.coef, dtype=float).reshape(2, 2)

    @classmethod
    def zero(cls):
        return cls(np.zeros(2), np.zeros((2, 2)))

    @property
    def alpha(self):
        return self.coef

    @property
    def beta(self):
        return self.const

    @property
    def is_affine(self):
        return True

    def value(self, phi1, phi2):
        return self.coef @ np.array([phi1, phi2], dtype=float) + self.const

    def jacobian(self, phi1=0.0, phi2=0.0):
        return self.coef.copy()

    def __eq__(self, other):
        return (isinstance(other, LinearToll)
                and np.array_equal(self.const, other.const)
                and np.array_equal(self.coef, other.coef))


def _residual(fn, phi1, phi2):
    jac = cost_jacobian(fn, phi1, phi2)
    return float(jac[1, 0] - jac[0, 1])


@dataclass(eq=False)
class IndistinguishableToll(EdgeCost):
    """Type-independent toll c + G(phi1, phi2) + psi(phi1 + phi2).

    G integrates the cost residual r = dl2/dphi1 - dl1/dphi2 along the
    segment of constant total flow s = phi1 + phi2:
    G = int_0^phi2 r(s - q, q) dq, so that dG/dphi2 - dG/dphi1 = r.
    """

    cost: EdgeCost
    c: float = 0.0
    psi: object = None  # callable of total flow, or None for zero
    psi_prime: object = None  # derivative of psi; finite differences if None

    def _g(self, s, x):
        if x <= 0:
            return 0.0
        if self.cost.is_affine:
            return float(self.cost.alpha[1, 0] - self.cost.alpha[0, 1]) * x
        return integrate.quad(lambda q: _residual(self.cost, max(s - q, 0.0), q), 0.0, x,
                              epsabs=1e-13, epsrel=1e-11, limit=200)[0]

    def _psi(self, s):
        return 0.0 if self.psi is None else float(self.psi(s))

    def _dpsi(self, s):
        if self.psi is None:
            return 0.0
        if self.psi_prime is not None:
            return float(self.psi_prime(s))
        h = 1e-6 * max(1.0, abs(s))
        if s - h >= 0:
            return (self._psi(s + h) - self._psi(s - h)) / (2 * h)
        return (-3 * self._psi(s) + 4 * self._psi(s + h) - self._psi(s + 2 * h)) / (2 * h)

    def scalar(self, phi1, phi2):
        s = phi1 + phi2
        return self.c + self._g(s, phi2) + self._psi(s)

    def value(self, phi1, phi2):
        t = self.scalar(phi1, phi2)
        return np.array([t, t])

    def jacobian(self, phi1, phi2):
        s = phi1 + phi2
        if self.cost.is_affine:
            g_s = 0.0
        else:
            h = 1e-5 * max(1.0, abs(s))
            if phi1 - h >= 0:
                g_s = (self._g(s + h, phi2) - self._g(s - h, phi2)) / (2 * h)
            else:
                g_s = (-3 * self._g(s, phi2) + 4 * self._g(s + h, phi2) - self._g(s + 2 * h, phi2)) / (2 * h)
        d1 = self._dpsi(s) + g_s
        d2 = d1 + _residual(self.cost, phi1, phi2)
        return np.array([[d1, d2], [d1, d2]])


@dataclass(frozen=True, eq=False)
class TollScheme:
    edges: tuple  # one toll evaluator per edge
    type_independent: bool = False
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    @classmethod
    def from_mapping(cls, n_edges, tolls, type_independent=False, label="custom"):
        """Build from ``{edge: toll}``; edges not listed get a zero toll."""
        return cls(tuple(tolls.get(e, LinearToll.zero()) for e in range(n_edges)), type_independent, label)

    @property
    def is_linear(self):
        return all(isinstance(t, LinearToll) for t in self.edges)

    def value(self, e, phi1, phi2):
        return self.edges[e].value(phi1, phi2)


@dataclass
class TollConditionReport:
    residuals: np.ndarray  # (E,) signed worst-case RHS - LHS per edge
    max_residual: float
    tol: float
    symbolic: bool

    @property
    def passed(self):
        return self.max_residual <= self.tol

    def failing_edges(self):
        return [int(e) for e in np.flatnonzero(np.abs(self.residuals) > self.tol)]


def _sample_box(game, rng, n_random):
    box = max(1.0, float(game.demands.sum()))
    g = np.linspace(0.0, box, 5)
    pts = [(x, y) for x in g for y in g]
    pts += [tuple(p) for p in rng.uniform(0.0, box, size=(n_random, 2))]
    return pts


def verify_toll_condition(game, tolls, samples=None, tol=None, seed=0):
    """Compare both sides of the symmetry-restoring identity on every edge.

    The residual reported per edge is RHS - LHS, i.e. the asymmetry that the
    tolls leave behind. Affine costs with linear tolls are checked exactly;
    otherwise the identity is sampled on a 5x5 grid plus ``samples`` random
    points (default 20) over ``[0, total demand]^2``.
    """
    costs = game.costs
    symbolic = all(c.is_affine for c in costs) and all(t.is_affine for t in tolls.edges)
    res = np.zeros(len(costs))
    if symbolic:
        for e, (c, t) in enumerate(zip(costs, tolls.edges)):
            rhs = c.alpha[1, 0] - c.alpha[0, 1]
            lhs = t.alpha[0, 1] - t.alpha[1, 0]
            res[e] = rhs - lhs
        tol = 1e-10 if tol is None else tol
    else:
        rng = np.random.default_rng(seed)
        pts = _sample_box(game, rng, 20 if samples is None else samples)
        for e, (c, t) in enumerate(zip(costs, tolls.edges)):
            worst = 0.0
            for x, y in pts:
                jc = cost_jacobian(c, x, y)
                jt = cost_jacobian(t, x, y)
                r = (jc[1, 0] - jc[0, 1]) - (jt[0, 1] - jt[1, 0])
                if abs(r) > abs(worst):
                    worst = r
            res[e] = worst
        tol = 1e-7 if tol is None else tol
    return TollConditionReport(res, float(np.max(np.abs(res), initial=0.0)), float(tol), symbolic)


def distinguishable_tolls(game, strategy="charge_type2"):
    """Linear tolls charged to a single type.

    ``charge_type2`` tolls only the second type, by (alpha12 - alpha21) * phi1;
    ``charge_type1`` tolls only the first type, by (alpha21 - alpha12) * phi2.
    Negative values are subsidies and are kept.
    """
    try:
        strategy = STRATEGY_ALIASES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None
    if not all(c.is_affine for c in game.costs):
        raise NotAffine("distinguishable tolls are built for affine costs; use indistinguishable_tolls")
    out = []
    for c in game.costs:
        d = c.alpha[1, 0] - c.alpha[0, 1]
        coef = np.zeros((2, 2))
        if strategy == "charge_type2":
            coef[1, 0] = -d
        else:
            coef[0, 1] = d
        out.append(LinearToll(np.zeros(2), coef))
    return TollScheme(tuple(out), False, strategy)


def _per_edge(value, n):
    if value is None or callable(value) or np.isscalar(value):
        return [value] * n
    value = list(value)
    if len(value) != n:
        raise ValueError(f"expected {n} per-edge values, got {len(value)}")
    return value


def indistinguishable_tolls(game, psi=None, c=None, psi_prime=None):
    """Type-independent tolls; ``psi`` and ``c`` may be scalars/callables or per-edge lists."""
    n = game.n_edges
    psis = _per_edge(psi, n)
    dpsis = _per_edge(psi_prime, n)
    cs = [0.0 if x is None else float(x) for x in _per_edge(c, n)]
    if any(x < 0 for x in cs):
        raise ValueError("toll constants must be >= 0")
    out = []
    for e, cost in enumerate(game.costs):
        if cost.is_affine and psis[e] is None:
            d = cost.alpha[1, 0] - cost.alpha[0, 1]
            out.append(LinearToll(np.full(2, cs[e]), np.array([[0.0, d], [0.0, d]])))
        else:
            out.append(IndistinguishableToll(cost, cs[e], psis[e], dpsis[e]))
    default = psi is None and not any(cs)
    return TollScheme(tuple(out), True, "indistinguishable" if default else "indistinguishable-custom")


def construct_tolls(game, scheme):
    """Dispatch on a scheme name as used in game files and the command line."""
    if scheme == "indistinguishable":
        return indistinguishable_tolls(game)
    return distinguishable_tolls(game, scheme)


def apply_tolls(game, tolls):
    """Game whose equilibrium costs include ``tolls``; untolled costs are kept for social cost."""
    return game.with_tolls(tolls)


def shift_nonnegative(game, tolls, samples=20, seed=0):
    """Add the smallest per-edge constant making every sampled toll value >= 0.

    Heuristic for nonlinear tolls: negativity is only checked on the sample
    box. Linear tolls are exact since their minimum over a box sits at a corner.
    """
    rng = np.random.default_rng(seed)
    pts = _sample_box(game, rng, samples)
    out = []
    for t in tolls.edges:
        low = min(float(np.min(t.value(x, y))) for x, y in pts)
        shift = max(0.0, -low)
        if shift == 0.0:
            out.append(t)
        elif isinstance(t, LinearToll):
            out.append(LinearToll(t.const + shift, t.coef))
        elif isinstance(t, IndistinguishableToll):
            out.append(dataclasses.replace(t, c=t.c + shift))
        else:
            raise TypeError(f"cannot shift toll of type {type(t).__name__}")
    return TollScheme(tuple(out), tolls.type_independent, tolls.label + "+shift")
