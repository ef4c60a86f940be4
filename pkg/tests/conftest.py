import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome == "failed"):
        if report.when == "call" or report.when == "setup":
            _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)
