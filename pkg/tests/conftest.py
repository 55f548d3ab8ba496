import numpy as np
import pytest

ACCEPTANCE = {}


@pytest.fixture
def rs():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Store one PASS/FAIL line per acceptance criterion and print it."""
    def _record(k, ok, detail):
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[k] = line
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
