"""Reference utilities, reward groupings, and scenario generation for the
resource-allocation experiments (n = 8 projects, grouped into attributes)."""

from __future__ import annotations

import numpy as np

from .grids import GridProduct, grid_from_lists
from .models import LinearGroups, ScenarioSet
from .pla import ShapeSpec

N_PROJECTS = 8

#: Structural rows used when solving: Lipschitz-1 on top of the
#: questioning shape (monotone, conservative, convex/concave, normalized).
def solve_shape(lipschitz: float = 1.0, curvature: bool = True) -> ShapeSpec:
    return ShapeSpec(
        lipschitz=lipschitz,
        monotone=True,
        conservative=True,
        curvature=("convex", "concave") if curvature else (),
        normalized=True,
    )


def exp_utility_2d_raw(x, y):
    return np.exp(x) - np.exp(-y) - np.exp(-x - 2.0 * y)


def exp_utility_2d(x, y):
    """The bivariate reference utility, normalized to 0 at (0,0), 1 at (1,1).

    Componentwise increasing, convex in the first attribute, concave in the
    second, and submodular (mixing best/worst across attributes is
    preferred), so it satisfies every structural row used here.
    """
    lo = exp_utility_2d_raw(0.0, 0.0)
    hi = exp_utility_2d_raw(1.0, 1.0)
    return (exp_utility_2d_raw(x, y) - lo) / (hi - lo)


def exp_utility_3d_raw(x, y, z):
    return np.exp(x) - np.exp(-y) - np.exp(-z) - np.exp(-x - 2.0 * y - z)


def exp_utility_3d(x, y, z):
    lo = exp_utility_3d_raw(0.0, 0.0, 0.0)
    hi = exp_utility_3d_raw(1.0, 1.0, 1.0)
    return (exp_utility_3d_raw(x, y, z) - lo) / (hi - lo)


def reward_groups_2d() -> LinearGroups:
    """Projects 1-5 feed attribute one, projects 6-8 attribute two."""
    return LinearGroups(((0, 1, 2, 3, 4), (5, 6, 7)), N_PROJECTS)


def constraint_groups_2d() -> LinearGroups:
    """The sub-portfolio whose expected utility is floor-constrained."""
    return LinearGroups(((2, 3, 4), (6, 7)), N_PROJECTS)


def reward_groups_3d() -> LinearGroups:
    return LinearGroups(((0, 1, 2), (3, 4, 5), (6, 7)), N_PROJECTS)


def uniform_scenarios(seed: int, k: int, dim: int = N_PROJECTS) -> ScenarioSet:
    """K equally likely draws from the uniform distribution on [0,1]^dim."""
    rng = np.random.default_rng(seed)
    return ScenarioSet(rng.random((k, dim)), np.full(k, 1.0 / k))


def example_question_grid() -> GridProduct:
    """The 2 x 3 walkthrough grid with the documented interior coordinate."""
    return grid_from_lists([0.0, 1.0], [0.0, 0.3706, 1.0])
