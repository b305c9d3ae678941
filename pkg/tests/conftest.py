"""Shared fixtures and the acceptance-line reporter.

Each test in test_acceptance.py is one numbered criterion; the
logreport hook below prints a single PASS/FAIL line per criterion to
stderr so the gate is readable straight off the pytest output.
"""

import re
import sys

import pytest

from divlab import arith


@pytest.fixture(scope="session")
def table_2k():
    return arith.build_spf_table(2, 2001)


@pytest.fixture(scope="session")
def table_20k():
    return arith.build_spf_table(2, 20001)


@pytest.fixture(scope="session")
def table_1e4():
    return arith.build_spf_table(2, 10 ** 4 + 1)


_CRIT = re.compile(r"test_acceptance\.py::test_c(\d+)")


def pytest_runtest_logreport(report):
    m = _CRIT.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "PASS" if report.passed else "FAIL"
        sys.stderr.write("acceptance criterion %02d: %s (%s)\n"
                         % (int(m.group(1)), status, report.nodeid.split("::")[-1]))
        sys.stderr.flush()
