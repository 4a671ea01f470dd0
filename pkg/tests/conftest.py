import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stepgraphon.core import constant, uniform_grid  # noqa: E402

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def U():
    """Clique on the first half."""
    return uniform_grid([[1.0, 0.0], [0.0, 0.0]])


@pytest.fixture
def V():
    """Two disjoint half-density blocks."""
    return uniform_grid([[0.5, 0.0], [0.0, 0.5]])


@pytest.fixture
def Q():
    return constant(0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
