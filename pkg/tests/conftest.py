import numpy as np
import pytest

# criterion number -> (label, passed, detail); filled by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        label, ok, detail = ACCEPTANCE_LINES[k]
        terminalreporter.write_line(f"C{k:<3d}{'PASS' if ok else 'FAIL'}  {label}: {detail}")
