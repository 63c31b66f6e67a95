"""Plain-text graph files.

    # @name: interval
    # any other comment
    vertex <id> <leads>
    edge <id> <v1> <v2> <length>

Metadata travels as ``# @key: value`` comment lines.  Floats are written
with ``repr`` so parse(serialize(g)) == g exactly.
"""

from __future__ import annotations

import math
from pathlib import Path

from .graph import Edge, GraphError, QuantumGraph, Vertex


class ParseError(GraphError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class GraphSyntaxError(ParseError):
    """Unknown record, wrong field count or malformed number."""


class DuplicateIdError(ParseError):
    pass


class DanglingReferenceError(ParseError):
    """Edge endpoint that is never declared as a vertex."""


class NonPositiveLengthError(ParseError):
    pass


def _int(tok: str, what: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphSyntaxError(f"{what} must be an integer, got {tok!r}", lineno) from None


def parse_graph(text: str) -> QuantumGraph:
    vertices: list[Vertex] = []
    edges: list[tuple[Edge, int]] = []
    meta: dict[str, str] = {}
    seen_v: dict[int, int] = {}
    seen_e: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("@") and ":" in body:
                key, _, value = body[1:].partition(":")
                meta[key.strip()] = value.strip()
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "vertex":
            if len(tok) != 3:
                raise GraphSyntaxError(f"'vertex' takes 2 fields, got {len(tok) - 1}", lineno)
            vid, leads = _int(tok[1], "vertex id", lineno), _int(tok[2], "lead count", lineno)
            if leads < 0:
                raise GraphSyntaxError(f"lead count must be non-negative, got {leads}", lineno)
            if vid in seen_v:
                raise DuplicateIdError(f"vertex {vid} already defined on line {seen_v[vid]}", lineno)
            seen_v[vid] = lineno
            vertices.append(Vertex(vid, leads))
        elif kind == "edge":
            if len(tok) != 5:
                raise GraphSyntaxError(f"'edge' takes 4 fields, got {len(tok) - 1}", lineno)
            eid = _int(tok[1], "edge id", lineno)
            u, v = _int(tok[2], "vertex id", lineno), _int(tok[3], "vertex id", lineno)
            try:
                length = float(tok[4])
            except ValueError:
                raise GraphSyntaxError(f"length must be a number, got {tok[4]!r}", lineno) from None
            if not math.isfinite(length):
                raise GraphSyntaxError(f"length must be finite, got {tok[4]!r}", lineno)
            if length <= 0:
                raise NonPositiveLengthError(f"edge {eid} has length {length}", lineno)
            if eid in seen_e:
                raise DuplicateIdError(f"edge {eid} already defined on line {seen_e[eid]}", lineno)
            seen_e[eid] = lineno
            edges.append((Edge(eid, u, v, length), lineno))
        else:
            raise GraphSyntaxError(f"unknown record {kind!r}", lineno)
    for e, lineno in edges:
        for end in (e.u, e.v):
            if end not in seen_v:
                raise DanglingReferenceError(f"edge {e.id} references undefined vertex {end}", lineno)
    return QuantumGraph(vertices, [e for e, _ in edges], meta)


def serialize_graph(graph: QuantumGraph) -> str:
    out = []
    for k in sorted(graph.metadata):
        v = graph.metadata[k]
        if "\n" in k or "\n" in v or ":" in k or k != k.strip() or v != v.strip() or not k:
            raise GraphError(f"metadata entry {k!r} cannot be written as a comment line")
        out.append(f"# @{k}: {v}")
    for v in sorted(graph.vertices, key=lambda v: v.id):
        out.append(f"vertex {v.id} {v.leads}")
    for e in sorted(graph.edges, key=lambda e: e.id):
        out.append(f"edge {e.id} {e.u} {e.v} {e.length!r}")
    return "\n".join(out) + "\n"


def read_graph(path: str | Path) -> QuantumGraph:
    return parse_graph(Path(path).read_text())


def write_graph(graph: QuantumGraph, path: str | Path) -> None:
    Path(path).write_text(serialize_graph(graph))
