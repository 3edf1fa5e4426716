import pytest

from vodcache.recgraph import RecommendationGraph
from vodcache.reqmodel import build_transition_matrix

_CRITERIA = {}


@pytest.fixture(scope="session")
def criteria():
    """Map of acceptance criterion number -> (passed, detail)."""
    return _CRITERIA


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k:>2}: {detail}")


@pytest.fixture
def path3():
    """Videos 1-2-3 linked both ways."""
    return RecommendationGraph.from_edges(3, [(1, 2), (2, 1), (2, 3), (3, 2)])


@pytest.fixture
def path3_matrix(path3):
    return build_transition_matrix(path3, beta=1.0, kappa=0.8, p_cont=0.4)
