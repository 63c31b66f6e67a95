import math

import numpy as np
import pytest
from hypothesis import settings

from qgres.generators import generate
from qgres.graph import Edge, QuantumGraph, Vertex

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def interval(length=1.0, leads=(0, 2)):
    return generate("interval_with_leads", 1, leads=leads, length=length)


def closed_interval(length=1.0):
    return interval(length, (0, 0))


def star(arms=3, lengths=(1.0, 1.3, 1.7), centre_leads=0, tip_leads=2):
    vs = [Vertex(0, centre_leads)] + [Vertex(k + 1, tip_leads) for k in range(arms)]
    es = [Edge(k, 0, k + 1, lengths[k % len(lengths)]) for k in range(arms)]
    return QuantumGraph(vs, es, {"name": f"star{arms}"})


def loop_and_parallel():
    """Self-loop at vertex 0 plus a double edge 0-1; every vertex unbalanced."""
    vs = [Vertex(0, 1), Vertex(1, 1)]
    es = [Edge(0, 0, 0, 1.3), Edge(1, 0, 1, 1.0), Edge(2, 0, 1, 1.6)]
    return QuantumGraph(vs, es, {"name": "loop_parallel"})


def lollipop():
    vs = [Vertex(0, 1), Vertex(1, 0), Vertex(2, 1), Vertex(3, 2)]
    es = [Edge(0, 0, 1, 1.0), Edge(1, 1, 2, 1.2), Edge(2, 2, 0, 1.45), Edge(3, 2, 3, 1.1)]
    return QuantumGraph(vs, es, {"name": "lollipop"})


def path(n_edges, length=1.0, seed=0):
    return generate("path_with_leads", n_edges + 1, leads=[2] + [1] * (n_edges - 1) + [2],
                    length=length, seed=seed)


def random_small_graph(rng: np.random.Generator) -> QuantumGraph:
    """A random unbalanced graph from one of several families with random lengths."""
    kind = int(rng.integers(4))
    seed = int(rng.integers(2**31))
    lo = float(rng.uniform(0.6, 1.2))
    hi = lo * float(rng.uniform(1.0, 1.8))
    if kind == 0:
        return generate("cycle_with_leads", int(rng.integers(2, 6)), leads=int(rng.choice([1, 3])),
                        length=(lo, hi), seed=seed)
    if kind == 1:
        n = int(rng.integers(2, 5))
        inner = [int(rng.choice([0, 1, 3])) for _ in range(n - 1)]
        return generate("path_with_leads", n + 1, leads=[int(rng.choice([0, 2]))] + inner + [2],
                        length=(lo, hi), seed=seed)
    if kind == 2:
        return generate("random_regular_with_leads", int(rng.choice([4, 6])), leads=int(rng.choice([1, 2])),
                        length=(lo, hi), seed=seed)
    arms = int(rng.integers(2, 5))
    lengths = tuple(float(x) for x in rng.uniform(lo, hi, arms))
    return star(arms, lengths, centre_leads=int(rng.choice([0, 1])), tip_leads=int(rng.choice([0, 2])))


@pytest.fixture
def iv():
    return interval()


@pytest.fixture
def rr20():
    return generate("random_regular_with_leads", 20, leads=1, length=(1.0, 2.0), seed=7)


Z_INTERVAL = [complex((2 * k + 1) * math.pi / 2, -math.log(3) / 2) for k in range(10)]
