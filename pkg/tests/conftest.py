import numpy as np
import pytest
from hypothesis import settings

from mwl.graph import matrices_from_weights

settings.register_profile("mwl", max_examples=60, deadline=None)
settings.load_profile("mwl")


@pytest.fixture
def triangle():
    return matrices_from_weights(np.ones((3, 3)) - np.eye(3))


@pytest.fixture
def two_vertex():
    return matrices_from_weights([[0.0, 2.5], [2.5, 0.0]])


@pytest.fixture
def path3():
    return matrices_from_weights([[0, 1, 0], [1, 0, 1], [0, 1, 0]])


def random_weights(rng, n, density=0.6):
    """Connected random symmetric weight matrix (a ring plus random chords)."""
    w = np.zeros((n, n))
    for i in range(n):
        j = (i + 1) % n
        w[i, j] = w[j, i] = rng.uniform(0.1, 2.0)
    mask = np.triu(rng.random((n, n)) < density, 2)
    vals = np.triu(rng.uniform(0.1, 2.0, (n, n)), 2) * mask
    w = w + vals + vals.T
    np.fill_diagonal(w, 0.0)
    return w


# Acceptance criteria record one line each; the lines are printed at the end
# of the run whether or not output capture is on.
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
