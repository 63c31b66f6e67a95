"""Deterministic graph families used by the experiments."""

from __future__ import annotations

from typing import Sequence

import networkx as nx
import numpy as np

from .graph import Edge, GraphClassParams, ParameterError, QuantumGraph, Vertex

FAMILIES = ("interval_with_leads", "cycle_with_leads", "random_regular_with_leads", "path_with_leads")

LeadRule = int | Sequence[int]
LengthRule = float | tuple[float, float]


def _leads(rule: LeadRule, n: int) -> list[int]:
    if isinstance(rule, (int, np.integer)):
        return [int(rule)] * n
    out = [int(k) for k in rule]
    if len(out) != n:
        raise ParameterError(f"lead pattern has {len(out)} entries, graph has {n} vertices")
    return out


def _lengths(rule: LengthRule, m: int, rng: np.random.Generator) -> tuple[list[float], float, float]:
    if isinstance(rule, tuple):
        lo, hi = map(float, rule)
        if not 0 < lo <= hi:
            raise ParameterError(f"bad length range {rule}")
        return [float(x) for x in rng.uniform(lo, hi, size=m)], lo, hi
    L = float(rule)
    if L <= 0:
        raise ParameterError(f"length must be positive, got {L}")
    return [L] * m, L, L


def generate(
    family: str,
    size: int,
    leads: LeadRule | None = None,
    length: LengthRule = 1.0,
    seed: int = 0,
    degree: int = 3,
) -> QuantumGraph:
    """Build a member of ``family``.

    ``leads`` is either a constant per-vertex lead count or an explicit list
    (one entry per vertex, in vertex-id order).  ``length`` is a constant or a
    ``(Lmin, Lmax)`` pair, in which case lengths are drawn uniformly with
    ``seed``.  The advertised class parameters are stored in the metadata.

    * ``interval_with_leads``: an interval cut into ``size`` segments; inner
      cut points carry no leads (Kirchhoff-transparent), leads default (0, 2).
    * ``path_with_leads``: ``size`` vertices on a line.
    * ``cycle_with_leads``: the cycle C_size (size 1 is a self-loop).
    * ``random_regular_with_leads``: a uniform ``degree``-regular simple graph.
    """
    if size < 1:
        raise ParameterError("size must be >= 1")
    rng = np.random.default_rng(seed)

    if family == "interval_with_leads":
        ends = (0, 2) if leads is None else leads
        ends = _leads(ends, 2) if not isinstance(ends, (int, np.integer)) else [int(ends)] * 2
        pattern = [ends[0]] + [0] * (size - 1) + [ends[1]]
        pairs = [(i, i + 1) for i in range(size)]
        D = 1 if size == 1 else 2
    elif family == "path_with_leads":
        if size < 2:
            raise ParameterError("path needs at least 2 vertices")
        pattern = _leads(1 if leads is None else leads, size)
        pairs = [(i, i + 1) for i in range(size - 1)]
        D = 2 if size > 2 else 1
    elif family == "cycle_with_leads":
        pattern = _leads(1 if leads is None else leads, size)
        pairs = [(i, (i + 1) % size) for i in range(size)]
        D = 2
    elif family == "random_regular_with_leads":
        if degree < 1 or degree >= size or (degree * size) % 2:
            raise ParameterError(f"no simple {degree}-regular graph on {size} vertices")
        pattern = _leads(1 if leads is None else leads, size)
        # networkx seeds its own RNG from an int; derive it from ours for reproducibility
        g = nx.random_regular_graph(degree, size, seed=int(rng.integers(2**31)))
        pairs = sorted(tuple(sorted(e)) for e in g.edges())
        D = degree
    else:
        raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")

    n_vertices = len(pattern)
    lengths, lo, hi = _lengths(length, len(pairs), rng)
    vs = [Vertex(i, pattern[i]) for i in range(n_vertices)]
    es = [Edge(k, u, v, lengths[k]) for k, (u, v) in enumerate(pairs)]
    params = GraphClassParams(D=D, n0=max(pattern), Lmin=lo, Lmax=hi)
    meta = {
        "name": f"{family}-{size}",
        "family": family,
        "size": str(size),
        "seed": str(seed),
        "D": str(params.D),
        "n0": str(params.n0),
        "Lmin": repr(params.Lmin),
        "Lmax": repr(params.Lmax),
    }
    if family == "random_regular_with_leads":
        meta["degree"] = str(degree)
    return QuantumGraph(vs, es, meta)


def advertised_params(graph: QuantumGraph) -> GraphClassParams:
    """Class parameters recorded by :func:`generate`."""
    m = graph.metadata
    return GraphClassParams(int(m["D"]), int(m["n0"]), float(m["Lmin"]), float(m["Lmax"]))


def interval(length: float = 1.0, leads: tuple[int, int] = (0, 2)) -> QuantumGraph:
    return generate("interval_with_leads", 1, leads=leads, length=length)
