"""Quantum graph data model: vertices with leads, edges with lengths, bonds.

A graph is the compact part (V, E, L) together with the number of leads
(semi-infinite edges) attached at every vertex.  Bonds are the two
orientations of every internal edge; every matrix in the package is indexed
by the canonical bond order returned by :meth:`QuantumGraph.bonds`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np


class GraphError(ValueError):
    """Structural problem with a graph (dangling endpoint, bad length, ...)."""


class ParameterError(ValueError):
    """Infeasible or inconsistent numeric parameters."""


@dataclass(frozen=True)
class Vertex:
    id: int
    leads: int = 0


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    length: float

    @property
    def is_loop(self) -> bool:
        return self.u == self.v


@dataclass(frozen=True)
class Bond:
    id: int
    origin: int
    terminus: int
    length: float
    reverse: int
    edge: int


@dataclass(frozen=True)
class GraphClassParams:
    """Bounds (D, n0, Lmin, Lmax) defining a class of quantum graphs."""

    D: int
    n0: int
    Lmin: float
    Lmax: float

    def __post_init__(self):
        if self.D < 1:
            raise ParameterError(f"D must be >= 1, got {self.D}")
        if self.n0 < 0:
            raise ParameterError(f"n0 must be >= 0, got {self.n0}")
        if not (0 < self.Lmin <= self.Lmax):
            raise ParameterError(f"need 0 < Lmin <= Lmax, got {self.Lmin}, {self.Lmax}")

    @classmethod
    def of(cls, graph: "QuantumGraph") -> "GraphClassParams":
        """Tightest class containing ``graph``."""
        lengths = [e.length for e in graph.edges]
        if not lengths:
            raise ParameterError("graph has no edges")
        return cls(
            D=max(1, max(graph.degree(v.id) for v in graph.vertices)),
            n0=max(v.leads for v in graph.vertices),
            Lmin=min(lengths),
            Lmax=max(lengths),
        )


@dataclass(frozen=True)
class ValidationReport:
    in_class: bool
    unbalanced: bool
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


class QuantumGraph:
    """Immutable finite open quantum graph (V, E, L, n).

    Parallel edges and self-loops are allowed; a self-loop adds 2 to the
    degree of its vertex and yields two bonds that are mutual reverses.
    """

    def __init__(
        self,
        vertices: Sequence[Vertex | tuple[int, int]],
        edges: Sequence[Edge | tuple[int, int, int, float]],
        metadata: Mapping[str, str] | None = None,
    ):
        vs = tuple(v if isinstance(v, Vertex) else Vertex(int(v[0]), int(v[1])) for v in vertices)
        es = tuple(
            e if isinstance(e, Edge) else Edge(int(e[0]), int(e[1]), int(e[2]), float(e[3]))
            for e in edges
        )
        ids = [v.id for v in vs]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate vertex id")
        eids = [e.id for e in es]
        if len(set(eids)) != len(eids):
            raise GraphError("duplicate edge id")
        known = set(ids)
        for v in vs:
            if v.leads < 0:
                raise GraphError(f"vertex {v.id}: negative lead count {v.leads}")
        for e in es:
            if e.u not in known or e.v not in known:
                raise GraphError(f"edge {e.id}: endpoint not a vertex ({e.u}, {e.v})")
            if not (e.length > 0 and math.isfinite(e.length)):
                raise GraphError(f"edge {e.id}: length must be positive and finite, got {e.length}")
        self.vertices = tuple(sorted(vs, key=lambda v: v.id))
        self.edges = tuple(sorted(es, key=lambda e: e.id))
        self.metadata = MappingProxyType({str(k): str(v) for k, v in (metadata or {}).items()})
        self._vindex = {v.id: v for v in vs}

    def __eq__(self, other):
        if not isinstance(other, QuantumGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and dict(self.metadata) == dict(other.metadata)
        )

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def __repr__(self):
        name = self.metadata.get("name", "")
        return f"QuantumGraph({name!r}, |V|={len(self.vertices)}, |E|={len(self.edges)})"

    def vertex(self, vid: int) -> Vertex:
        return self._vindex[vid]

    @cached_property
    def _degrees(self) -> dict[int, int]:
        deg = {v.id: 0 for v in self.vertices}
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return deg

    def degree(self, vid: int) -> int:
        """Internal degree d(v); a self-loop counts twice."""
        return self._degrees[vid]

    def leads(self, vid: int) -> int:
        return self._vindex[vid].leads

    @cached_property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @cached_property
    def bonds(self) -> tuple[Bond, ...]:
        """Bonds in canonical order: by edge id, forward (u->v) then backward."""
        out = []
        for e in sorted(self.edges, key=lambda e: e.id):
            k = len(out)
            out.append(Bond(k, e.u, e.v, e.length, k + 1, e.id))
            out.append(Bond(k + 1, e.v, e.u, e.length, k, e.id))
        return tuple(out)

    @property
    def n_bonds(self) -> int:
        return 2 * len(self.edges)

    @cached_property
    def bond_lengths(self) -> np.ndarray:
        arr = np.array([b.length for b in self.bonds], dtype=float)
        arr.setflags(write=False)
        return arr

    def with_metadata(self, **items: str) -> "QuantumGraph":
        meta = dict(self.metadata)
        meta.update({k: str(v) for k, v in items.items()})
        return QuantumGraph(self.vertices, self.edges, meta)

    def scaled(self, c: float) -> "QuantumGraph":
        """Same combinatorics with every length multiplied by ``c``."""
        es = [Edge(e.id, e.u, e.v, e.length * c) for e in self.edges]
        return QuantumGraph(self.vertices, es, self.metadata)


def total_length(graph: QuantumGraph) -> float:
    return graph.total_length


def bonds(graph: QuantumGraph) -> tuple[Bond, ...]:
    return graph.bonds


def validate(
    graph: QuantumGraph, params: GraphClassParams, require_unbalanced: bool = False
) -> ValidationReport:
    """Check class membership and, optionally, the unbalanced condition n(v) != d(v)."""
    violations = []
    class_ok = True
    for v in graph.vertices:
        d = graph.degree(v.id)
        if d > params.D:
            class_ok = False
            violations.append(f"vertex {v.id}: degree {d} > D={params.D}")
        if v.leads > params.n0:
            class_ok = False
            violations.append(f"vertex {v.id}: leads {v.leads} > n0={params.n0}")
        if d == 0 and v.leads == 0:
            class_ok = False
            violations.append(f"vertex {v.id}: isolated vertex without leads")
    for e in graph.edges:
        if not (params.Lmin <= e.length <= params.Lmax):
            class_ok = False
            violations.append(
                f"edge {e.id}: length {e.length!r} outside [{params.Lmin!r}, {params.Lmax!r}]"
            )
    unbalanced = True
    for v in graph.vertices:
        if v.leads == graph.degree(v.id):
            unbalanced = False
            if require_unbalanced:
                violations.append(f"vertex {v.id}: balanced, n(v) = d(v) = {v.leads}")
    return ValidationReport(in_class=class_ok, unbalanced=unbalanced, violations=tuple(violations))


def disjoint_union(*graphs: QuantumGraph) -> QuantumGraph:
    """Relabelled disjoint union; vertex and edge ids are renumbered consecutively."""
    vs, es = [], []
    for g in graphs:
        vmap = {}
        for v in g.vertices:
            vmap[v.id] = len(vs)
            vs.append(Vertex(len(vs), v.leads))
        for e in sorted(g.edges, key=lambda e: e.id):
            es.append(Edge(len(es), vmap[e.u], vmap[e.v], e.length))
    return QuantumGraph(vs, es, {"name": "union"})
