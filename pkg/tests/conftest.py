from fractions import Fraction

import pytest

from gasket_martin.kernel import ChainParams


@pytest.fixture
def third():
    return ChainParams(Fraction(1, 3))


@pytest.fixture
def quarter():
    return ChainParams(Fraction(1, 4))


_criteria: list = []


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion and assert it."""
    def record(k, ok, detail=""):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _criteria.append(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criteria, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
