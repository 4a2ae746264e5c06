import numpy as np
import pytest

from holonomy_lab._linalg import random_unitary
from holonomy_lab.bundle import UnitaryRep
from holonomy_lab.hyperbolic import genus2_group, schottky_group


@pytest.fixture(scope="session")
def schottky():
    return schottky_group()


@pytest.fixture(scope="session")
def genus2():
    return genus2_group()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_rep(group, rng, rank=2):
    return UnitaryRep(group, {g: random_unitary(rng, rank) for g in group.generators})


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
