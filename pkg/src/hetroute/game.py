"""The full problem instance: graph, demands, paths, edge costs and optional tolls."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .costs import AffineEdgeCost, SumEdgeCost, cost_jacobian
from .errors import NotAffine, UnsupportedTypeCount, ValidationError
from .network import Commodity, Graph, PathSet, as_flow_vector

DEFAULT_TYPE_NAMES = ("theta1", "theta2")


@dataclass(frozen=True, eq=False)
class Game:
    graph: Graph
    commodities: tuple
    paths: PathSet
    costs: tuple  # costs[e] is the untolled EdgeCost of edge e
    tolls: object = None  # TollScheme or None
    type_names: tuple = DEFAULT_TYPE_NAMES
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.type_names) != 2:
            raise UnsupportedTypeCount(f"exactly two user types are supported, got {len(self.type_names)}")
        object.__setattr__(self, "commodities", tuple(self.commodities))
        object.__setattr__(self, "costs", tuple(self.costs))
        for c in self.commodities:
            if len(c.demand) != 2:
                raise UnsupportedTypeCount("commodity demands must have exactly two entries")
        if len(self.costs) != self.graph.n_edges:
            raise ValidationError(
                f"{len(self.costs)} edge costs given for {self.graph.n_edges} edges")
        if len(self.paths.by_commodity) != len(self.commodities):
            raise ValidationError("path set and commodity list disagree in length")
        if self.tolls is not None and len(self.tolls.edges) != self.graph.n_edges:
            raise ValidationError("toll scheme does not cover the edge set")

    @classmethod
    def build(cls, graph, commodities, costs, explicit_paths=None, max_hops=None,
              tolls=None, type_names=DEFAULT_TYPE_NAMES, options=None):
        commodities = tuple(commodities)
        paths = PathSet.build(graph, commodities, explicit_paths, max_hops)
        return cls(graph, commodities, paths, tuple(costs), tolls, tuple(type_names), dict(options or {}))

    def with_tolls(self, tolls):
        return dataclasses.replace(self, tolls=tolls)

    def with_costs(self, costs):
        return dataclasses.replace(self, costs=tuple(costs), tolls=None)

    # ------------------------------------------------------------------ sizes

    @property
    def n_edges(self):
        return self.graph.n_edges

    @property
    def n_paths(self):
        return len(self.paths)

    @cached_property
    def incidence(self):
        return self.paths.incidence

    @cached_property
    def demands(self):
        return np.array([c.demand for c in self.commodities], dtype=float).reshape(-1, 2)

    @cached_property
    def blocks(self):
        """(commodity, type, path ids) for every block with positive demand."""
        out = []
        for k in range(len(self.commodities)):
            ids = self.paths.path_ids(k)
            for th in range(2):
                if self.demands[k, th] > 0:
                    out.append((k, th, ids))
        return out

    @cached_property
    def block_arrays(self):
        """Padded arrays describing ``blocks`` for the compiled kernels."""
        nb = len(self.blocks)
        width = max([len(ids) for _, _, ids in self.blocks], default=1)
        block_paths = np.zeros((nb, max(width, 1)), dtype=np.int64)
        block_len = np.zeros(nb, dtype=np.int64)
        block_type = np.zeros(nb, dtype=np.int64)
        block_demand = np.zeros(nb)
        for b, (k, th, ids) in enumerate(self.blocks):
            block_paths[b, :len(ids)] = ids
            block_len[b] = len(ids)
            block_type[b] = th
            block_demand[b] = self.demands[k, th]
        return block_paths, block_len, block_type, block_demand

    # ------------------------------------------------------------------ costs

    @property
    def has_tolls(self):
        return self.tolls is not None

    @cached_property
    def is_affine(self):
        if not all(c.is_affine for c in self.costs):
            return False
        return self.tolls is None or all(t.is_affine for t in self.tolls.edges)

    @cached_property
    def base_is_affine(self):
        return all(c.is_affine for c in self.costs)

    @cached_property
    def effective_costs(self):
        """Per-edge cost plus toll evaluators."""
        if self.tolls is None:
            return self.costs
        out = []
        for c, t in zip(self.costs, self.tolls.edges):
            if c.is_affine and t.is_affine:
                out.append(AffineEdgeCost(c.alpha + t.alpha, c.beta + t.beta))
            else:
                out.append(SumEdgeCost(c, t))
        return tuple(out)

    def cost_functions(self, tolled=True):
        return self.effective_costs if tolled else self.costs

    def affine_arrays(self, tolled=True):
        """Stacked ``alpha (E, 2, 2)`` and ``beta (E, 2)``; raises NotAffine otherwise."""
        key = "_aff_tolled" if tolled else "_aff_base"
        cached = self.__dict__.get(key)
        if cached is not None:
            return cached
        fns = self.cost_functions(tolled)
        if not all(f.is_affine for f in fns):
            raise NotAffine("game has non-affine edge costs or tolls")
        alpha = np.array([f.alpha for f in fns], dtype=float).reshape(-1, 2, 2)
        beta = np.array([f.beta for f in fns], dtype=float).reshape(-1, 2)
        self.__dict__[key] = (alpha, beta)
        return alpha, beta

    def uses_affine(self, tolled=True):
        return self.is_affine if tolled else self.base_is_affine

    def edge_flows(self, flows):
        return self.incidence @ as_flow_vector(flows, self.n_paths)

    def edge_costs(self, phi, tolled=True):
        """``(E, 2)`` edge costs at edge flows ``phi``."""
        phi = np.ascontiguousarray(phi, dtype=float)
        if self.uses_affine(tolled):
            alpha, beta = self.affine_arrays(tolled)
            return kernels.affine_edge_costs(phi, alpha, beta)
        fns = self.cost_functions(tolled)
        return np.array([f.value(phi[e, 0], phi[e, 1]) for e, f in enumerate(fns)]).reshape(-1, 2)

    def edge_jacobians(self, phi, tolled=True):
        """``(E, 2, 2)`` cost Jacobians at edge flows ``phi``."""
        if self.uses_affine(tolled):
            return self.affine_arrays(tolled)[0].copy()
        fns = self.cost_functions(tolled)
        return np.array([cost_jacobian(f, max(phi[e, 0], 0.0), max(phi[e, 1], 0.0))
                         for e, f in enumerate(fns)]).reshape(-1, 2, 2)

    def path_costs(self, flows, tolled=True):
        """``(P, 2)`` path costs: entry ``[p, th]`` is the cost type ``th`` pays on path ``p``."""
        phi = self.edge_flows(flows)
        return self.incidence.T @ self.edge_costs(phi, tolled)

    def marginal_path_costs(self, flows, tolled=False):
        """Gradient of the social cost with respect to path flows."""
        phi = self.edge_flows(flows)
        mc = self.edge_costs(phi, tolled) + np.einsum("eji,ej->ei", self.edge_jacobians(phi, tolled), phi)
        return self.incidence.T @ mc

    def social_cost_edges(self, phi, tolled=False):
        """Sum over edges and types of flow times cost."""
        return float(np.sum(phi * self.edge_costs(phi, tolled)))

    # ------------------------------------------------------------------ flows

    def uniform_flows(self):
        """Each block's demand split evenly over its paths."""
        f = np.zeros((self.n_paths, 2))
        for k, th, ids in self.blocks:
            f[ids, th] = self.demands[k, th] / len(ids)
        return f

    def random_flows(self, rng):
        """A random feasible flow vector (Dirichlet over each block's paths)."""
        f = np.zeros((self.n_paths, 2))
        for k, th, ids in self.blocks:
            f[ids, th] = self.demands[k, th] * rng.dirichlet(np.ones(len(ids)))
        return f


def commodity(source, sink, d1=0.0, d2=0.0):
    return Commodity(source, sink, (d1, d2))

