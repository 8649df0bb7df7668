"""Two-type edge cost functions, path costs and cost Jacobians.

Type index 0 is the first type (cars in the platooning model) and index 1 the
second (trucks). Jacobians follow ``J[i, j] = d cost_i / d phi_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolated, NegativeFlow, UnknownPath


class EdgeCost:
    """Base class: ``value`` maps (phi1, phi2) to a length-2 cost array."""

    def value(self, phi1, phi2):
        raise NotImplementedError

    def jacobian(self, phi1, phi2):
        """Analytic 2x2 Jacobian, or None when only finite differences are available."""
        return None

    @property
    def is_affine(self):
        return False


@dataclass(eq=False)
class AffineEdgeCost(EdgeCost):
    """cost_i = alpha[i, 0] * phi1 + alpha[i, 1] * phi2 + beta[i]."""

    alpha: np.ndarray
    beta: np.ndarray
    origin: object = field(default=None, repr=False)  # PlatooningParams etc., kept for serialisation

    def __post_init__(self):
        self.alpha = np.array(self.alpha, dtype=float).reshape(2, 2)
        self.beta = np.array(self.beta, dtype=float).reshape(2)

    def value(self, phi1, phi2):
        return self.alpha @ np.array([phi1, phi2], dtype=float) + self.beta

    def jacobian(self, phi1=0.0, phi2=0.0):
        return self.alpha.copy()

    @property
    def is_affine(self):
        return True

    def __eq__(self, other):
        return (isinstance(other, AffineEdgeCost)
                and np.array_equal(self.alpha, other.alpha)
                and np.array_equal(self.beta, other.beta))


class GeneralEdgeCost(EdgeCost):
    """Wraps ``fn(phi1, phi2) -> (c1, c2)`` and an optional analytic Jacobian."""

    def __init__(self, fn, jac=None, name=None):
        self.fn = fn
        self.jac = jac
        self.name = name or getattr(fn, "__name__", "general")

    def value(self, phi1, phi2):
        return np.asarray(self.fn(phi1, phi2), dtype=float).reshape(2)

    def jacobian(self, phi1, phi2):
        if self.jac is None:
            return None
        return np.asarray(self.jac(phi1, phi2), dtype=float).reshape(2, 2)

    def __repr__(self):
        return f"GeneralEdgeCost({self.name})"


class SumEdgeCost(EdgeCost):
    """Pointwise sum of two cost-shaped evaluators (edge cost plus toll)."""

    def __init__(self, first, second):
        self.first = first
        self.second = second

    def value(self, phi1, phi2):
        return self.first.value(phi1, phi2) + self.second.value(phi1, phi2)

    def jacobian(self, phi1, phi2):
        # differentiate each part on its own so a toll's semi-analytic
        # Jacobian is not replaced by finite differences of a quadrature
        j1 = self.first.jacobian(phi1, phi2)
        j2 = self.second.jacobian(phi1, phi2)
        if j1 is None and j2 is None:
            return None
        if j1 is None:
            j1 = fd_jacobian(self.first, phi1, phi2)
        if j2 is None:
            j2 = fd_jacobian(self.second, phi1, phi2)
        return np.asarray(j1, dtype=float) + np.asarray(j2, dtype=float)


# ---------------------------------------------------------------------------
# platooning model

@dataclass(frozen=True)
class PlatooningParams:
    L: float
    a: float
    b: float
    c0: float
    alpha_fuel: float
    beta_fuel: float
    dgamma0: float
    gamma0: float = 1.0

    def __post_init__(self):
        bad = []
        if not self.b > 0:
            bad.append("b > 0")
        if self.a > 0:
            bad.append("a <= 0")
        if self.c0 < 0:
            bad.append("c0 >= 0")
        if self.alpha_fuel < 0:
            bad.append("alpha_fuel >= 0")
        if self.beta_fuel < 0:
            bad.append("beta_fuel >= 0")
        if self.dgamma0 > 0:
            bad.append("dgamma0 <= 0")
        if self.gamma0 != 1.0:
            bad.append("gamma0 == 1")
        if self.L < 0:
            bad.append("L >= 0")
        if bad:
            raise AssumptionViolated("platooning parameters violate " + ", ".join(bad))


@dataclass(frozen=True)
class PhysicalConstants:
    """Raw truck and road constants; lumped into PlatooningParams before use."""

    L: float
    a: float
    b: float
    c0: float
    eta_eng: float  # engine efficiency
    rho_d: float  # diesel energy density
    c_d: float  # nominal air drag coefficient
    area: float  # frontal area
    rho_air: float
    mass: float
    c_r: float  # roll resistance coefficient
    dgamma0: float
    g: float = 9.81

    def lump(self) -> PlatooningParams:
        denom = self.eta_eng * self.rho_d
        return PlatooningParams(
            L=self.L, a=self.a, b=self.b, c0=self.c0,
            alpha_fuel=self.L * self.rho_air * self.area * self.c_d / (2.0 * denom),
            beta_fuel=self.L * self.mass * self.g * self.c_r / denom,
            dgamma0=self.dgamma0,
        )


def platooning_affine(params) -> AffineEdgeCost:
    """Linearised car/truck costs of the platooning model.

    Accepts PlatooningParams or PhysicalConstants. Raises AssumptionViolated
    when a coefficient comes out negative; the truck own-flow slope is the one
    that the model's monotonicity requirement constrains.
    """
    origin = params
    if isinstance(params, PhysicalConstants):
        params = params.lump()
    L, a, b, c0 = params.L, params.a, params.b, params.c0
    af, bf, g0, dg0 = params.alpha_fuel, params.beta_fuel, params.gamma0, params.dgamma0
    latency_slope = -L * a / b**2
    cross_fuel = 2.0 * c0 * af * g0 * b * a
    alpha = np.array([
        [latency_slope, latency_slope],
        [latency_slope + cross_fuel, latency_slope + c0 * af * dg0 * b**2 + cross_fuel],
    ])
    beta = np.array([L / b, L / b + c0 * bf + c0 * af * g0 * b**2])
    if alpha[1, 1] < 0:
        raise AssumptionViolated(
            f"truck cost decreases in truck flow (alpha_tt = {alpha[1, 1]:.6g} < 0)")
    if alpha[1, 0] < 0:
        raise AssumptionViolated(
            f"negative cross coefficient alpha_tc = {alpha[1, 0]:.6g}")
    return AffineEdgeCost(alpha, beta, origin=origin)


# ---------------------------------------------------------------------------
# evaluation

def edge_cost(fn: EdgeCost, phi1, phi2):
    if phi1 < 0 or phi2 < 0:
        raise NegativeFlow(f"edge flows must be >= 0, got ({phi1}, {phi2})")
    c = fn.value(phi1, phi2)
    return float(c[0]), float(c[1])


def path_cost(game, flows, path, theta, tolled=True):
    """Cost of ``path`` for type ``theta``, including tolls when the game has them."""
    if not 0 <= path < game.n_paths:
        raise UnknownPath(path)
    return float(game.path_costs(flows, tolled=tolled)[path, theta])


def fd_jacobian(fn: EdgeCost, phi1, phi2, fd_step=None):
    """Finite-difference Jacobian; central in the interior, one-sided near 0."""
    x = np.array([phi1, phi2], dtype=float)
    jac = np.empty((2, 2))
    for j in range(2):
        h = fd_step if fd_step is not None else 1e-5 * max(1.0, abs(x[j]))
        e = np.zeros(2)
        e[j] = h
        if x[j] - h >= 0:
            jac[:, j] = (fn.value(*(x + e)) - fn.value(*(x - e))) / (2 * h)
        else:
            # second-order forward difference
            f0 = fn.value(*x)
            f1 = fn.value(*(x + e))
            f2 = fn.value(*(x + 2 * e))
            jac[:, j] = (-3 * f0 + 4 * f1 - f2) / (2 * h)
    return jac


def cost_jacobian(fn: EdgeCost, phi1, phi2, fd_step=None, analytic=True):
    if analytic:
        jac = fn.jacobian(phi1, phi2)
        if jac is not None:
            return np.asarray(jac, dtype=float)
    return fd_jacobian(fn, phi1, phi2, fd_step)


@dataclass
class Assumption1Report:
    nonnegativity: list  # (phi1, phi2, type, value)
    monotonicity: list  # (phi1, phi2, type, drop)
    coefficients: list  # human-readable notes for affine costs
    symbolic: bool

    @property
    def ok(self):
        return not (self.nonnegativity or self.monotonicity or self.coefficients)


def validate_assumption1(fn: EdgeCost, box=(1.0, 1.0), resolution=11, tol=1e-12):
    """Check nonnegativity and own-flow monotonicity.

    Affine costs are decided from their coefficients; other costs are sampled
    on a ``resolution x resolution`` grid over ``[0, box[0]] x [0, box[1]]``.
    """
    if fn.is_affine:
        nonneg, mono, notes = [], [], []
        for i in range(2):
            if fn.beta[i] < 0:
                nonneg.append((0.0, 0.0, i, float(fn.beta[i])))
            if fn.alpha[i, i] < 0:
                mono.append((0.0, 0.0, i, float(fn.alpha[i, i])))
            if fn.alpha[i, 1 - i] < 0:
                notes.append(f"alpha[{i},{1 - i}] = {fn.alpha[i, 1 - i]:.6g} < 0")
        return Assumption1Report(nonneg, mono, notes, True)

    g1 = np.linspace(0.0, box[0], resolution)
    g2 = np.linspace(0.0, box[1], resolution)
    vals = np.array([[fn.value(x, y) for y in g2] for x in g1])  # (n1, n2, 2)
    nonneg = [(float(g1[i]), float(g2[j]), th, float(vals[i, j, th]))
              for i, j, th in zip(*np.nonzero(vals < -tol))]
    mono = []
    drop1 = vals[1:, :, 0] - vals[:-1, :, 0]
    for i, j in zip(*np.nonzero(drop1 < -tol)):
        mono.append((float(g1[i]), float(g2[j]), 0, float(drop1[i, j])))
    drop2 = vals[:, 1:, 1] - vals[:, :-1, 1]
    for i, j in zip(*np.nonzero(drop2 < -tol)):
        mono.append((float(g1[i]), float(g2[j]), 1, float(drop2[i, j])))
    return Assumption1Report(nonneg, mono, [], False)
