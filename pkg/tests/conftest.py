import numpy as np
import pytest

from ssfilt.verify import random_stable_system

ACCEPTANCE_LINES = []


def make_case(k: int, radius: float = 0.9, orders=(1, 2, 3, 4), lengths=(8, 64, 257)):
    """Seeded (system, v0, x, dy) with M and N cycling through the given grids."""
    M = orders[k % len(orders)]
    N = lengths[k % len(lengths)]
    rng = np.random.default_rng(10_000 + k)
    sys = random_stable_system(M, radius, seed=k)
    return sys, rng.standard_normal(M), rng.standard_normal(N), rng.standard_normal(N)


def rel_err(actual, expected) -> float:
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = np.max(np.abs(expected))
    err = np.max(np.abs(actual - expected))
    return float(err / scale) if scale > 0 else float(err)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_report():
    def record(criterion: str, passed: bool, detail: str = "", status: str | None = None):
        status = status or ("PASS" if passed else "FAIL")
        line = f"criterion {criterion}: {status}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
