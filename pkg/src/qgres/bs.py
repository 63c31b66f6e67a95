"""Rooted quantum graphs, uniform-root statistics and spectral-measure convergence.

The normalized resonance measure mu_Q = (1/L_Q) sum_z delta_z is paired with
a Gaussian through the two-line boundary integral; along each line the
integrand is a bond average of the diagonal entries

    F(b0, z) = [U'(z) (Id - U(z))^{-1}]_{b0 b0},   sum_b F(b, z) = -f'/f(z),

which depend on the graph only through a neighbourhood of b0 (up to an
exponentially small tail).  That locality is what makes mu_Q converge
along graph sequences whose rooted neighbourhood statistics converge.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import networkx as nx
import numpy as np
import scipy.linalg as sla
from networkx.algorithms import isomorphism as iso

from . import secular, trace
from .graph import Edge, GraphClassParams, GraphError, ParameterError, QuantumGraph, Vertex
from .secular import DomainError


class ResonanceProximityError(DomainError):
    """Id - U(z) is numerically singular: z sits on (or next to) a resonance."""


@dataclass(frozen=True)
class RootedGraph:
    """A graph with a distinguished oriented edge (the root bond).

    ``root_edge`` may be absent from ``graph`` only for radius-0 balls,
    which keep just the root's origin vertex.
    """

    graph: QuantumGraph
    root_edge: int
    forward: bool
    origin: int
    terminus: int

    @classmethod
    def from_bond(cls, graph: QuantumGraph, b0: int) -> "RootedGraph":
        if not 0 <= b0 < graph.n_bonds:
            raise GraphError(f"root bond {b0} not in graph with {graph.n_bonds} bonds")
        b = graph.bonds[b0]
        return cls(graph, b.edge, b0 == 2 * (b0 // 2), b.origin, b.terminus)

    @property
    def root(self) -> int:
        """Bond id of the root in ``graph``."""
        for b in self.graph.bonds:
            if b.edge == self.root_edge and b.origin == self.origin and b.terminus == self.terminus:
                if self.origin != self.terminus or (b.id % 2 == 0) == self.forward:
                    return b.id
        raise GraphError("root edge is not part of this rooted graph")


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform distribution over the root bond: the law of [Q, b] for b uniform."""

    graph: QuantumGraph

    @property
    def weights(self) -> np.ndarray:
        n = self.graph.n_bonds
        return np.full(n, 1.0 / n)

    def roots(self):
        for b in range(self.graph.n_bonds):
            yield RootedGraph.from_bond(self.graph, b)

    def expectation(self, values) -> complex:
        """E_nu[X] for per-bond values X (array of length |B|)."""
        values = np.asarray(values)
        if values.shape[0] != self.graph.n_bonds:
            raise ParameterError("one value per bond expected")
        return complex(self.weights @ values)


def _adjacency(graph: QuantumGraph) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v.id: set() for v in graph.vertices}
    for e in graph.edges:
        adj[e.u].add(e.v)
        adj[e.v].add(e.u)
    return adj


def _distances(graph: QuantumGraph, source: int, radius: int) -> dict[int, int]:
    adj = _adjacency(graph)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def rooted_ball(rg: RootedGraph, radius: int) -> RootedGraph:
    """Induced ball of combinatorial radius ``radius`` around the root's origin."""
    if radius < 0:
        raise ParameterError("radius must be non-negative")
    g = rg.graph
    keep = _distances(g, rg.origin, radius)
    verts = [Vertex(v.id, v.leads) for v in g.vertices if v.id in keep]
    edges = [Edge(e.id, e.u, e.v, e.length) for e in g.edges if e.u in keep and e.v in keep]
    ball = QuantumGraph(verts, edges, {"name": f"ball{radius}:{g.metadata.get('name', 'graph')}"})
    return RootedGraph(ball, rg.root_edge, rg.forward, rg.origin, rg.terminus)


def _to_nx(rg: RootedGraph) -> nx.MultiGraph:
    G = nx.MultiGraph()
    for v in rg.graph.vertices:
        role = 1 if v.id == rg.origin else (2 if v.id == rg.terminus else 0)
        G.add_node(v.id, leads=v.leads, role=role)
    for e in rg.graph.edges:
        G.add_edge(e.u, e.v, length=e.length, root=e.id == rg.root_edge)
    return G


def _node_match(a, b) -> bool:
    return a["leads"] == b["leads"] and a["role"] == b["role"]


def _edge_match(eps: float):
    def match(d1, d2) -> bool:
        if len(d1) != len(d2):
            return False
        for flag in (True, False):
            l1 = sorted(x["length"] for x in d1.values() if x["root"] == flag)
            l2 = sorted(x["length"] for x in d2.values() if x["root"] == flag)
            if len(l1) != len(l2) or any(abs(p - q) >= eps for p, q in zip(l1, l2)):
                return False
        return True

    return match


def isomorphic(b1: RootedGraph, b2: RootedGraph, eps: float) -> bool:
    """Root-preserving isomorphism with equal lead counts and lengths within eps?"""
    G1, G2 = _to_nx(b1), _to_nx(b2)
    if G1.number_of_nodes() != G2.number_of_nodes() or G1.number_of_edges() != G2.number_of_edges():
        return False
    return iso.MultiGraphMatcher(G1, G2, node_match=_node_match, edge_match=_edge_match(eps)).is_isomorphic()


@dataclass(frozen=True)
class RootedDistance:
    value: float
    radius: int
    approximate: bool = False

    def __float__(self) -> float:
        return self.value


def default_eps_grid(k_max: int = 16) -> list[float]:
    return [1.0 / k for k in range(1, k_max + 1)]


def rooted_distance(rg1: RootedGraph, rg2: RootedGraph, eps_grid: Sequence[float] | None = None,
                    max_ball_edges: int = 5000) -> RootedDistance:
    """Smallest grid value eps with matching radius-floor(1/eps) balls.

    Returns ``inf`` when no grid value works.  Balls larger than
    ``max_ball_edges`` stop the search; the result is then an upper bound
    flagged ``approximate``.
    """
    grid = list(default_eps_grid() if eps_grid is None else eps_grid)
    if not grid or any(e <= 0 for e in grid) or any(b >= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("eps_grid must be a decreasing sequence of positive numbers")
    best = RootedDistance(math.inf, -1)
    for eps in grid:
        r = int(math.floor(1.0 / eps + 1e-12))
        b1, b2 = rooted_ball(rg1, r), rooted_ball(rg2, r)
        if max(len(b1.graph.edges), len(b2.graph.edges)) > max_ball_edges:
            return RootedDistance(best.value, best.radius, approximate=True)
        if not isomorphic(b1, b2, eps):
            break
        best = RootedDistance(eps, r)
    return best


# ------------------------------------------------------------ diagonal entries


def F_entry(graph: QuantumGraph, b0: int, z: complex) -> complex:
    """[U'(z) (Id - U(z))^{-1}]_{b0 b0} from one linear solve."""
    z = complex(z)
    U = secular.build_U(graph, z)
    n = U.shape[0]
    if not 0 <= b0 < n:
        raise GraphError(f"bond {b0} out of range")
    lu, piv = sla.lu_factor(np.eye(n) - U, check_finite=False)
    if np.abs(np.diag(lu)).min() <= 1e3 * secular.EPS * max(1.0, np.abs(U).sum(axis=0).max()):
        raise ResonanceProximityError(f"Id - U is numerically singular at z={z}")
    e = np.zeros(n, dtype=complex)
    e[b0] = 1.0
    x = sla.lu_solve((lu, piv), e, check_finite=False)
    dU_row = U[b0] * (1j * graph.bond_lengths)
    return complex(dU_row @ x)


def F_entries(graph: QuantumGraph, z: complex) -> np.ndarray:
    """F(b, z) for every bond b."""
    try:
        return secular.diagonal_entries(graph, z)
    except DomainError as exc:
        raise ResonanceProximityError(str(exc)) from exc


def F_entry_series(graph: QuantumGraph, b0: int, z: complex, terms: int) -> complex:
    """Partial sum sum_{k<terms} [U' U^k]_{b0 b0}, valid for Im z > 0.

    Term k only involves closed bond walks of length k + 1 through b0.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("the series for F needs Im z > 0")
    U = secular.build_U(graph, z)
    row = U[b0] * (1j * graph.bond_lengths)
    total = 0j
    for _ in range(terms):
        total += row[b0]
        row = row @ U
    return total


def locality_bound(params: GraphClassParams, z: complex, radius: int) -> float:
    """Bound on |F_1 - F_2| for two roots whose radius-``radius`` balls agree exactly.

    Walk terms of order k <= 2 radius - 2 coincide; each later term is at
    most Lmax q^{k+1} with q = exp(-Im z Lmin), counted once per graph.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("locality bound needs Im z > 0")
    q = math.exp(-z.imag * params.Lmin)
    k0 = max(0, 2 * radius - 1)
    return 2 * params.Lmax * q ** (k0 + 1) / (1 - q)


def F_bound(params: GraphClassParams, z: complex) -> float:
    """Uniform-in-x bound on |F(b, z)| in either series regime."""
    z = complex(z)
    Y = -math.log(params.D + params.n0) / params.Lmin
    if z.imag > 0:
        q = math.exp(-z.imag * params.Lmin)
        return params.Lmax * q / (1 - q)
    if z.imag < Y:
        # U'(Id - U)^{-1} = -i L - i L sum_{k>=1} U^{-k}
        r = (params.D + params.n0) * math.exp(z.imag * params.Lmin)
        return params.Lmax * (1 + r / (1 - r))
    raise DomainError(f"no uniform bound for Y={Y} <= Im z <= 0")


# ------------------------------------------------------------ spectral pairing


@dataclass
class SpectralMeasureSample:
    """<mu_Q, g> = (1/(2 pi i L_Q)) (bottom - top) with line integrals of g f'/f."""

    graph_name: str
    g: object
    value: complex
    bottom: complex
    top: complex
    prefactor: float
    y1: float
    y2: float
    tail_bound: float
    quad_error: float
    n_bonds: int
    total_length: float

    @property
    def bond_average_lines(self) -> tuple[complex, complex]:
        """int g E_nu[F] dx on each line, so that value = -(prefactor/(2 pi i)) (bottom - top)."""
        return -self.bottom / self.n_bonds, -self.top / self.n_bonds


def spectral_pairing(graph: QuantumGraph, g, y1: float | None = None, y2: float | None = None,
                     params: GraphClassParams | None = None, tol: float = 1e-10) -> SpectralMeasureSample:
    """Pair the normalized resonance measure with ``g`` through the boundary integral.

    ``tol`` is relative to L_Q (it bounds the error of the normalized value).
    """
    params = secular.check_class(graph, params)
    d1, d2 = trace.default_lines(params, g.a)
    y1 = d1 if y1 is None else y1
    y2 = d2 if y2 is None else y2
    LQ = graph.total_length
    budget = tol * LQ / 4
    T = trace.truncation_for(g, graph, params, y1, y2, budget)
    bi = trace.boundary_integral(graph, g, y1, y2, T, params, tol=budget / 2, tail_tol=budget)
    norm = trace.TWO_PI_I * LQ
    return SpectralMeasureSample(
        graph_name=str(graph.metadata.get("name", "graph")), g=g, value=bi.value / norm,
        bottom=bi.bottom, top=bi.top, prefactor=graph.n_bonds / LQ, y1=y1, y2=y2,
        tail_bound=bi.tail_bound / (2 * math.pi * LQ), quad_error=bi.quad_error / (2 * math.pi * LQ),
        n_bonds=graph.n_bonds, total_length=LQ,
    )


def lambda_estimate(graph: QuantumGraph, xs, y: float) -> np.ndarray:
    """(|B|/L_Q) E_nu[F(x + i y)] on a grid of x, i.e. -f'/f / L_Q."""
    zs = np.asarray(xs, dtype=float) + 1j * y
    return -secular.log_derivative(graph, zs) / graph.total_length


# ------------------------------------------------------------ experiments


@dataclass
class ConvergenceRow:
    size: int
    value: complex | None
    diff_prev: float | None
    error: str | None = None


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]

    @property
    def diffs(self) -> list[float]:
        return [r.diff_prev for r in self.rows if r.diff_prev is not None]

    def monotone(self) -> bool:
        d = self.diffs
        return len(d) >= 1 and all(b < a for a, b in zip(d, d[1:]))

    def verdict(self, threshold: float = 1e-3, last: int = 3) -> bool:
        """Differences decrease over the last ``last`` sizes and end below ``threshold``."""
        d = self.diffs[-(last - 1):] if last > 1 else self.diffs[-1:]
        if not d or any(r.error for r in self.rows[-last:]):
            return False
        return all(b < a for a, b in zip(d, d[1:])) and d[-1] < threshold

    @property
    def final(self) -> complex | None:
        vals = [r.value for r in self.rows if r.value is not None]
        return vals[-1] if vals else None

    def to_csv(self) -> str:
        out = ["size,re_pairing,im_pairing,abs_diff_prev"]
        for r in self.rows:
            if r.value is None:
                out.append(f"{r.size},nan,nan,nan")
                continue
            d = "" if r.diff_prev is None else f"{r.diff_prev:.17g}"
            out.append(f"{r.size},{r.value.real:.17g},{r.value.imag:.17g},{d}")
        return "\n".join(out) + "\n"


def convergence_experiment(family: Callable[[int], QuantumGraph], sizes: Sequence[int], g,
                           y1: float | None = None, y2: float | None = None,
                           tol: float = 1e-10) -> ConvergenceTable:
    """Pairings <mu_{Q_N}, g> along a graph family and their successive differences.

    A size whose graph or pairing fails is recorded with its error and the
    experiment moves on; the next difference is then taken against the last
    successful size.
    """
    rows = []
    prev = None
    for n in sizes:
        try:
            value = spectral_pairing(family(n), g, y1, y2, tol=tol).value
        except (ValueError, RuntimeError) as exc:
            rows.append(ConvergenceRow(int(n), None, None, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(ConvergenceRow(int(n), value, None if prev is None else abs(value - prev)))
        prev = value
    return ConvergenceTable(rows)


@dataclass
class LambdaEstimate:
    xs: np.ndarray
    y: float
    values: np.ndarray
    cauchy_error: float
    size: int

    def to_csv(self) -> str:
        out = ["x,y,re,im"]
        for x, v in zip(self.xs, self.values):
            out.append(f"{x:.17g},{self.y:.17g},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(out) + "\n"


def lambda_experiment(family: Callable[[int], QuantumGraph], sizes: Sequence[int], xs,
                      y: float) -> LambdaEstimate:
    """Estimate of the limiting line density at the largest size, with the max change from the previous size."""
    if len(sizes) < 1:
        raise ParameterError("at least one size needed")
    xs = np.asarray(xs, dtype=float)
    prev = None
    err = math.inf
    for n in sizes:
        cur = lambda_estimate(family(n), xs, y)
        if prev is not None:
            err = float(np.max(np.abs(cur - prev)))
        prev = cur
    return LambdaEstimate(xs, y, prev, err, int(sizes[-1]))


def cycle_family(leads: int = 1, length: float = 1.0) -> Callable[[int], QuantumGraph]:
    from .generators import generate

    return lambda n: generate("cycle_with_leads", n, leads=leads, length=length)


def path_family(interior_leads: int = 1, end_leads: int = 2, length: float = 1.0) -> Callable[[int], QuantumGraph]:
    """Paths on n + 1 vertices (n edges); the end lead count keeps endpoints at the interior total degree."""
    from .generators import generate

    def make(n: int) -> QuantumGraph:
        pattern = [end_leads] + [interior_leads] * (n - 1) + [end_leads]
        return generate("path_with_leads", n + 1, leads=pattern, length=length)

    return make


def mid_strip_gaussian(params: GraphClassParams, a: float, x0: float = 0.0) -> "trace.GaussianTest":
    """Gaussian anchored halfway down the resonance strip, keeping |g| moderate on both lines."""
    Y = -math.log(params.D + params.n0) / params.Lmin
    return trace.GaussianTest(a, x0, Y / 2)
