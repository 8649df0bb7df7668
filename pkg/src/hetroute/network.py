"""Directed graph, commodities, simple-path enumeration and flow aggregation.

Flow vectors are ``(n_paths, 2)`` float arrays indexed by global path id and
type; edge flows are ``(n_edges, 2)`` arrays. Global path ids run over the
commodities in order, so commodity ``k`` owns ids
``paths.offsets[k]:paths.offsets[k + 1]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import SinkUnreachable, UnknownPath, ValidationError

PATH_WARNING_LIMIT = 10_000


@dataclass(frozen=True)
class Graph:
    vertices: tuple
    edges: tuple  # edges[i] = (tail, head); the index is the edge id

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise ValidationError("duplicate vertex ids")
        for eid, (tail, head) in enumerate(self.edges):
            if tail not in vs or head not in vs:
                raise ValidationError(
                    f"edge {eid} ({tail}->{head}) references a missing vertex")

    @classmethod
    def from_edge_list(cls, vertices, edges):
        """Build from ``(edge_id, tail, head)`` triples; ids must be dense 0..E-1."""
        edges = list(edges)
        ids = [e[0] for e in edges]
        if len(set(ids)) != len(ids):
            raise ValidationError("edge ids are not unique")
        if sorted(ids) != list(range(len(ids))):
            raise ValidationError("edge ids must be dense 0..|E|-1")
        ordered = sorted(edges, key=lambda e: e[0])
        return cls(tuple(vertices), tuple((t, h) for _, t, h in ordered))

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def out_edges(self):
        adj = {v: [] for v in self.vertices}
        for eid, (tail, _) in enumerate(self.edges):
            adj[tail].append(eid)
        return adj


@dataclass(frozen=True)
class Commodity:
    source: object
    sink: object
    demand: tuple = (0.0, 0.0)

    def __post_init__(self):
        d = tuple(float(x) for x in self.demand)
        object.__setattr__(self, "demand", d)
        if any(x < 0 for x in d) or any(not np.isfinite(x) for x in d):
            raise ValidationError(f"commodity {self.source}->{self.sink}: demands must be finite and >= 0")

    @property
    def has_demand(self):
        return any(x > 0 for x in self.demand)


def enumerate_paths(graph: Graph, commodity: Commodity, max_hops=None) -> list:
    """All simple source->sink paths with at most ``max_hops`` edges.

    Paths are edge-id tuples in lexicographic order. ``max_hops`` defaults to
    ``|V| - 1``, which is the longest possible simple path.
    """
    s, t = commodity.source, commodity.sink
    vs = set(graph.vertices)
    if s not in vs or t not in vs:
        raise ValidationError(f"commodity endpoint {s if s not in vs else t} is not a vertex")
    if max_hops is None:
        max_hops = max(len(graph.vertices) - 1, 0)
    if max_hops < 0:
        raise ValueError("max_hops must be nonnegative")

    found = []
    if s == t:
        found.append(())
    else:
        # iterative DFS; out-edges visited in increasing id order
        out = graph.out_edges
        stack = [(s, (), frozenset([s]))]
        while stack:
            v, path, seen = stack.pop()
            if len(path) >= max_hops:
                continue
            for eid in reversed(out[v]):
                head = graph.edges[eid][1]
                if head in seen:
                    continue
                if head == t:
                    found.append(path + (eid,))
                else:
                    stack.append((head, path + (eid,), seen | {head}))
        found.sort()
    if len(found) > PATH_WARNING_LIMIT:
        warnings.warn(f"commodity {s}->{t} has {len(found)} paths", RuntimeWarning, stacklevel=2)
    if not found and commodity.has_demand:
        raise SinkUnreachable(f"no path from {s} to {t} within {max_hops} hops")
    return found


def check_path(graph: Graph, commodity: Commodity, path: Sequence[int]):
    """Raise ValidationError unless ``path`` is a simple source->sink path."""
    v = commodity.source
    seen = {v}
    for eid in path:
        if not 0 <= eid < graph.n_edges:
            raise ValidationError(f"path {tuple(path)} uses unknown edge {eid}")
        tail, head = graph.edges[eid]
        if tail != v:
            raise ValidationError(f"path {tuple(path)} is not contiguous at edge {eid}")
        if head in seen:
            raise ValidationError(f"path {tuple(path)} repeats vertex {head}")
        seen.add(head)
        v = head
    if v != commodity.sink:
        raise ValidationError(f"path {tuple(path)} does not end at sink {commodity.sink}")


@dataclass(frozen=True)
class PathSet:
    """Per-commodity path lists over a graph with ``n_edges`` edges."""

    by_commodity: tuple  # tuple of tuples of edge-id tuples
    n_edges: int
    explicit: tuple = field(default=())  # commodity indices given explicitly

    def __post_init__(self):
        for k, plist in enumerate(self.by_commodity):
            if len(set(plist)) != len(plist):
                raise ValidationError(f"commodity {k} lists a duplicate path")

    @classmethod
    def build(cls, graph, commodities, explicit=None, max_hops=None):
        explicit = explicit or {}
        lists = []
        for k, com in enumerate(commodities):
            if k in explicit:
                plist = [tuple(p) for p in explicit[k]]
                for p in plist:
                    check_path(graph, com, p)
                if not plist and com.has_demand:
                    raise SinkUnreachable(f"commodity {k} has demand but no paths")
            else:
                plist = enumerate_paths(graph, com, max_hops)
            lists.append(tuple(plist))
        return cls(tuple(lists), graph.n_edges, tuple(sorted(explicit)))

    @cached_property
    def paths(self):
        return [p for plist in self.by_commodity for p in plist]

    @cached_property
    def offsets(self):
        return np.cumsum([0] + [len(pl) for pl in self.by_commodity])

    @cached_property
    def commodity_of(self):
        return np.repeat(np.arange(len(self.by_commodity)), [len(pl) for pl in self.by_commodity])

    def __len__(self):
        return len(self.paths)

    def path_ids(self, k):
        return np.arange(self.offsets[k], self.offsets[k + 1])

    @cached_property
    def incidence(self):
        """Dense 0/1 edge-by-path matrix."""
        mat = np.zeros((self.n_edges, len(self.paths)))
        for j, p in enumerate(self.paths):
            mat[list(p), j] = 1.0
        return mat


def as_flow_vector(flows, n_paths):
    """Coerce an array or ``{(path, type): value}`` mapping to an ``(n_paths, 2)`` array."""
    if isinstance(flows, dict):
        out = np.zeros((n_paths, 2))
        for (p, th), val in flows.items():
            if not 0 <= p < n_paths:
                raise UnknownPath(p)
            out[p, th] = val
        return out
    f = np.asarray(flows, dtype=float)
    if f.ndim != 2 or f.shape[1] != 2:
        raise ValueError(f"flow vector must have shape (n_paths, 2), got {f.shape}")
    if f.shape[0] > n_paths:
        raise UnknownPath(f"flow vector has {f.shape[0]} rows for {n_paths} paths")
    if f.shape[0] < n_paths:
        raise ValueError(f"flow vector has {f.shape[0]} rows for {n_paths} paths")
    return f


def edge_flows(flows, paths: PathSet) -> np.ndarray:
    f = as_flow_vector(flows, len(paths))
    return paths.incidence @ f


@dataclass
class FeasibilityReport:
    residuals: np.ndarray  # (K, 2): sum of path flows minus demand
    negative: list  # (path, type, value) triples
    limits: np.ndarray  # (K, 2): allowed |residual| per block

    @property
    def max_violation(self):
        """Largest residual in excess of its block's tolerance (<= 0 when satisfied)."""
        if self.limits.size == 0:
            return 0.0
        return float(np.max(np.abs(self.residuals) - self.limits))

    @property
    def feasible(self):
        return not self.negative and self.max_violation <= 0.0


def validate_feasible(flows, commodities, paths: PathSet, rel_tol=1e-9) -> FeasibilityReport:
    f = as_flow_vector(flows, len(paths))
    demands = np.array([c.demand for c in commodities], dtype=float).reshape(-1, 2)
    sums = np.zeros_like(demands)
    for k in range(len(commodities)):
        sums[k] = f[paths.path_ids(k)].sum(axis=0)
    residuals = sums - demands
    limits = rel_tol * np.maximum(1.0, demands)
    negative = [(int(p), int(th), float(f[p, th])) for p, th in zip(*np.nonzero(f < 0))]
    return FeasibilityReport(residuals, negative, limits)
