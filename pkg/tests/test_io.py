import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgres.graph import Edge, GraphError, QuantumGraph, Vertex
from qgres.graph_io import (
    DanglingReferenceError,
    DuplicateIdError,
    GraphSyntaxError,
    NonPositiveLengthError,
    parse_graph,
    read_graph,
    serialize_graph,
    write_graph,
)

from conftest import interval

INTERVAL_TEXT = "vertex 0 0\nvertex 1 2\nedge 0 0 1 1.0\n"


def test_parse_interval():
    g = parse_graph("# an interval\n" + INTERVAL_TEXT)
    assert g == QuantumGraph([Vertex(0, 0), Vertex(1, 2)], [Edge(0, 0, 1, 1.0)])


def test_metadata_comments():
    g = parse_graph("# @name: demo\n#@seed:3\n" + INTERVAL_TEXT)
    assert dict(g.metadata) == {"name": "demo", "seed": "3"}


@pytest.mark.parametrize(
    "text, exc, line",
    [
        ("vertex 0 0\nvertex 0 1\n", DuplicateIdError, 2),
        ("vertex 0 0\nvertex 1 0\nedge 0 0 1 1\nedge 0 1 0 2\n", DuplicateIdError, 4),
        ("vertex 0 0\nedge 0 0 7 1.0\n", DanglingReferenceError, 2),
        ("vertex 0 0\nvertex 1 0\n\nedge 0 0 1 0\n", NonPositiveLengthError, 4),
        ("vertex 0 0\nvertex 1 0\nedge 0 0 1 -2.5\n", NonPositiveLengthError, 3),
        ("vertex 0\n", GraphSyntaxError, 1),
        ("vertex a 0\n", GraphSyntaxError, 1),
        ("vertex 0 -1\n", GraphSyntaxError, 1),
        ("vertex 0 0\nvertex 1 0\nedge 0 0 1 abc\n", GraphSyntaxError, 3),
        ("vertex 0 0\nvertex 1 0\nedge 0 0 1 nan\n", GraphSyntaxError, 3),
        ("node 0 0\n", GraphSyntaxError, 1),
    ],
)
def test_parse_errors_are_distinct_and_located(text, exc, line):
    with pytest.raises(exc) as info:
        parse_graph(text)
    assert info.value.line == line and f"line {line}" in str(info.value)
    assert isinstance(info.value, GraphError)


def test_edge_before_vertex_is_fine():
    g = parse_graph("edge 0 0 1 1.5\nvertex 1 2\nvertex 0 0\n")
    assert g.total_length == 1.5


def test_file_roundtrip(tmp_path):
    p = tmp_path / "g.qg"
    write_graph(interval(1.25), p)
    assert read_graph(p) == interval(1.25)


graphs = st.integers(1, 8).flatmap(
    lambda nv: st.tuples(
        st.lists(st.integers(0, 4), min_size=nv, max_size=nv),
        st.lists(
            st.tuples(st.integers(0, nv - 1), st.integers(0, nv - 1),
                      st.floats(1e-6, 1e6, allow_nan=False, allow_infinity=False)),
            max_size=12,
        ),
        st.dictionaries(st.sampled_from(["name", "seed", "family", "note"]),
                        st.text("abcxyz0123 _-.", min_size=1, max_size=12).map(str.strip).filter(bool),
                        max_size=3),
        st.permutations(list(range(nv))),
    )
)


@given(graphs)
def test_roundtrip_identity(data):
    leads, edges, meta, perm = data
    ids = [3 * p + 1 for p in perm]
    g = QuantumGraph([Vertex(ids[k], n) for k, n in enumerate(leads)],
                     [Edge(10 + 2 * k, ids[u], ids[v], L) for k, (u, v, L) in enumerate(edges)], meta)
    text = serialize_graph(g)
    assert parse_graph(text) == g
    assert serialize_graph(parse_graph(text)) == text
