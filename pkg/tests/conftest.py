import numpy as np
import pytest

from ctqw import graphs


def random_connected_graph(rng, n, p=0.4):
    """Random spanning tree plus extra edges with probability ``p``."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(0, k)]
        edges.add(graphs._pair(int(order[k]), int(parent)))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    return graphs.Graph.from_edges(n, sorted(edges))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[cid])
