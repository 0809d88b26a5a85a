import pytest

from hublabel.graph import Graph, compute_shortest_paths

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def path_graph(t, length=1):
    return Graph.from_edges(t, [(i, i + 1, length) for i in range(1, t)])


@pytest.fixture
def path3():
    g = path_graph(3)
    return g, compute_shortest_paths(g)


@pytest.fixture
def record():
    def _record(num, ok, detail=""):
        ACCEPTANCE[num] = (bool(ok), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        tr.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
