import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from nocgraph.graph import Graph  # noqa: E402

# filled in by test_acceptance.py, printed at the end of the session
ACCEPTANCE = {}


def random_graph(rng, n, m, weighted=False, max_weight=10):
    src = rng.integers(0, n, size=m)
    dst = rng.integers(0, n, size=m)
    w = rng.integers(1, max_weight + 1, size=m).astype(float) if weighted else None
    return Graph(n, src, dst, w)


@st.composite
def graphs(draw, max_vertices=30, max_edges=80, weighted=False):
    n = draw(st.integers(1, max_vertices))
    m = draw(st.integers(0, max_edges))
    src = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    dst = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    w = None
    if weighted:
        w = draw(st.lists(st.integers(1, 20), min_size=m, max_size=m))
    return Graph(n, src, dst, w)


@pytest.fixture(scope="session")
def demo_graph():
    from nocgraph.graph import generate_power_law_graph

    return generate_power_law_graph(1 << 14, 8, 1.5, 7, max_weight=16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {line}")
