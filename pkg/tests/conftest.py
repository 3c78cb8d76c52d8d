import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

_acceptance = []


@pytest.fixture
def rng():
    return np.random.default_rng(20121007)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{outcome:7s} {name}")
