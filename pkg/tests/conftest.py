"""Shared fixtures and the acceptance summary printed at the end of a run."""
from __future__ import annotations

import pytest

from qpgordon.contfrac import expand

_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """``acceptance(n, ok, detail)`` records one criterion and prints its line."""

    def record(n: int, ok: bool, detail: str = ""):
        line = f"ACCEPTANCE {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])


@pytest.fixture(scope="session")
def golden():
    return expand("surd:(sqrt(5)-1)/2", 40)
