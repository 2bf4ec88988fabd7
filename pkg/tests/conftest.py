from pathlib import Path

import pytest

from orgnet.model import CommGraph, Dataset, build_org_tree, extract_teams

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

F1_EDGES = [("A", "R"), ("B", "R"), ("a1", "A"), ("a2", "A"), ("b1", "B"), ("c1", "a1")]
C1_WEIGHTS = {("a1", "a2"): 5, ("a2", "a1"): 3, ("a1", "b1"): 2, ("A", "a1"): 7, ("c1", "A"): 1}


@pytest.fixture
def f1():
    return build_org_tree(F1_EDGES)


@pytest.fixture
def c1(f1):
    return CommGraph(C1_WEIGHTS, f1.nodes)


@pytest.fixture
def ds1(f1, c1):
    """F1/C1 without cleaning, teams at level 1: TA={A,a1,a2,c1}, TB={B,b1}."""
    return Dataset(tree=f1, comm=c1, teams=extract_teams(f1, team_level=1, min_size=1))


# one pass/fail line per acceptance criterion --------------------------------

_criteria: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    k = m.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _criteria.setdefault(k, []).append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        ok = all(o == "passed" for o in _criteria[k])
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}")
