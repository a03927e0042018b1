import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    mark = _criteria.get(report.nodeid)
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        mark["outcome"] = report.outcome


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criteria[item.nodeid] = {"number": m.args[0], "title": m.args[1], "outcome": "not run"}


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for info in sorted(_criteria.values(), key=lambda v: v["number"]):
        tr.write_line(f"criterion {info['number']:>2}: {word.get(info['outcome'], info['outcome'].upper())}  {info['title']}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
