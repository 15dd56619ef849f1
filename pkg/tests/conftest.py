import numpy as np
import pytest

from opdiff.series import TruncatedSeries

ACCEPTANCE_LINES: list[str] = []


def S(*coeffs) -> TruncatedSeries:
    return TruncatedSeries(list(coeffs))


@pytest.fixture
def rng():
    return np.random.default_rng(20211208)


def random_poly(rng, deg, scale=1.0):
    return TruncatedSeries(scale * (rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
