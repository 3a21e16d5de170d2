"""Shared fixtures and the acceptance summary hook.

Every test in test_acceptance.py carries a one-line docstring naming
its criterion; the terminal summary prints one PASS/FAIL line per
criterion after the run.
"""

from __future__ import annotations

import pytest

from conlab import build_intra_graphs
from conlab.fixtures import fix_a, fix_b, fix_c, fix_d

_acceptance_results: list[tuple[str, bool]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    doc = item.function.__doc__ or item.name
    label = doc.strip().splitlines()[0]
    _acceptance_results.append((label, report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _acceptance_results:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")


@pytest.fixture(scope="session")
def fix_a_history():
    return fix_a()


@pytest.fixture(scope="session")
def fix_a_graphs(fix_a_history):
    return build_intra_graphs(fix_a_history)


@pytest.fixture(scope="session")
def fix_b_history():
    return fix_b()


@pytest.fixture(scope="session")
def fix_b_graphs(fix_b_history):
    return build_intra_graphs(fix_b_history)


@pytest.fixture(scope="session")
def fix_c_history():
    return fix_c()


@pytest.fixture(scope="session")
def fix_d_parts():
    return fix_d()
