import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hetfilter.graph import Graph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=7, directed=None):
    n = draw(st.integers(min_n, max_n))
    is_directed = draw(st.booleans()) if directed is None else directed
    if is_directed:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    else:
        pairs = list(itertools.combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, k in zip(pairs, keep) if k], directed=is_directed)


@st.composite
def instances(draw, min_n=1, max_n=7, max_t=2, directed=None):
    g = draw(graphs(min_n, max_n, directed))
    hi = min(max_t, g.n - 1)
    t = draw(st.lists(st.integers(0, hi), min_size=g.n, max_size=g.n))
    return g, t


def random_instance(rng: np.random.Generator, n: int, p: float, max_t: int = 2, directed: bool = False):
    if directed:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    else:
        pairs = list(itertools.combinations(range(n), 2))
    u = rng.random(len(pairs))
    g = Graph.from_edges(n, [e for e, x in zip(pairs, u) if x < p], directed=directed)
    t = rng.integers(0, min(max_t, n - 1) + 1, size=n).tolist()
    return g, t


@pytest.fixture
def fig1_n10():
    from hetfilter.randgen import two_clique_counterexample

    return two_clique_counterexample(10)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
