import hypothesis
import numpy as np
import pytest

from upro.benchmarks import example_question_grid, exp_utility_2d
from upro.grids import unit_grid
from upro.pla import ShapeSpec

hypothesis.settings.register_profile(
    "default", max_examples=25, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("default")

#: One line per acceptance criterion, echoed in the terminal summary so the
#: PASS/FAIL lines survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid22():
    return unit_grid([2, 2])


@pytest.fixture
def grid33():
    return unit_grid([3, 3])


@pytest.fixture
def walkthrough_grid():
    return example_question_grid()


@pytest.fixture
def true_utility():
    return exp_utility_2d


@pytest.fixture
def shape_full():
    """Monotone + Lipschitz-1 + conservative + normalized (no curvature)."""
    return ShapeSpec(
        lipschitz=1.0, monotone=True, conservative=True, curvature=(), normalized=True
    )


def random_conservative_values(grid, rng):
    """Random monotone, conservative, normalized node values.

    Uses u = 1 - (1 - A(x)) (1 - B(y)) with A, B increasing from 0 to 1;
    its mixed difference is nonpositive on every rectangle.
    """
    n1, n2 = grid.shape
    a = np.sort(np.concatenate([[0.0], rng.random(n1 - 2), [1.0]]))
    b = np.sort(np.concatenate([[0.0], rng.random(n2 - 2), [1.0]]))
    table = 1.0 - np.outer(1.0 - a, 1.0 - b)
    return table.ravel(order="F")
