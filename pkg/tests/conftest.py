import math

import numpy as np
import pytest


@pytest.fixture
def hom():
    """Balanced two-mode beamsplitter, both inputs occupied."""
    return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store one pass/fail line for the acceptance summary."""

    def _record(name: str, passed: bool, detail: str = ""):
        _ACCEPTANCE[name] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda k: int(k.split()[0])):
        passed, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
