import math

import pytest

from subheat import bernstein


@pytest.fixture(scope="session")
def rel():
    """Relativistic subordinator, f = (lam + 1)^(1/2) - 1."""
    return bernstein.catalog("relativistic", alpha="1/2")


@pytest.fixture(scope="session")
def rel_third():
    return bernstein.catalog("relativistic", alpha="1/3")


@pytest.fixture(scope="session")
def gr2():
    return bernstein.catalog("gamma-ratio-2", alpha="1/2")


PI = math.pi


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
