import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_messages(K):
    m = np.arange(2 ** K)[:, None]
    return ((m >> np.arange(K - 1, -1, -1)) & 1).astype(np.uint8)


def trial_division(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def record_criterion(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
