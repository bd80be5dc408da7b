import numpy as np
import pytest

from liesde import AlgebraDescriptor, RngStream, build_basis

COMPACT = ("so3", "so5", "su2", "su3")
ALL = COMPACT + ("rn:4",)


@pytest.fixture(scope="session")
def bases():
    return {name: build_basis(AlgebraDescriptor.parse(name)) for name in ALL + ("so2", "so4", "rn:1", "rn:2", "rn:3")}


@pytest.fixture
def rng():
    return RngStream(12345, 0)


def random_coeffs(n, d, seed=0):
    return np.random.default_rng(seed).standard_normal((n, d))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
