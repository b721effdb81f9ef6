import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_conservative_values
from upro.errors import DegenerateRescale, GridMismatch
from upro.grids import grid_from_lists, locate_cell, unit_grid
from upro.pla import (
    Partition,
    PlaUtility,
    ShapeSpec,
    TYPE1,
    TYPE2,
    check_shape,
    coefficient_vector,
    interpolate_from_function,
    mixed_partition,
    sup_distance,
)


class TestEvaluate:
    def test_lower_piece_formula(self, grid22):
        u = PlaUtility(grid22, np.array([0.0, 0.5, 0.5, 1.0]))
        assert u((0.5, 0.25)) == pytest.approx(0.375, abs=1e-12)

    def test_reproduces_node_values(self, walkthrough_grid, rng):
        vals = random_conservative_values(walkthrough_grid, rng)
        u = PlaUtility(walkthrough_grid, vals)
        for nid in range(walkthrough_grid.node_count):
            p = walkthrough_grid.node_point(nid)
            assert u(p) == pytest.approx(vals[nid], abs=1e-12)

    def test_diagonal_midpoint_both_types(self, grid22):
        vals = np.array([0.0, 0.6, 0.6, 1.0])
        assert PlaUtility(grid22, vals, TYPE1)((0.5, 0.5)) == pytest.approx(0.5)
        assert PlaUtility(grid22, vals, TYPE2)((0.5, 0.5)) == pytest.approx(0.6)

    def test_continuity_across_facets(self, rng):
        grid = grid_from_lists([0, 0.4, 1], [0, 0.55, 1])
        vals = random_conservative_values(grid, rng)
        for kind in (TYPE1, TYPE2):
            u = PlaUtility(grid, vals, kind)
            for _ in range(300):
                # points on cell edges and diagonals
                t = rng.random()
                pts = [(0.4, t), (t, 0.55), (0.4 * t, 0.55 * t)]
                for x, y in pts:
                    up = u((min(x + 1e-12, 1.0), y))
                    down = u((max(x - 1e-12, 0.0), y))
                    assert abs(up - down) < 1e-9

    def test_type2_dominates_type1_under_conservativity(self, rng):
        grid = unit_grid([3, 4])
        for _ in range(50):
            vals = random_conservative_values(grid, rng)
            u1 = PlaUtility(grid, vals, TYPE1)
            u2 = PlaUtility(grid, vals, TYPE2)
            pts = rng.random((40, 2))
            assert np.all(u2.eval_many(pts) - u1.eval_many(pts) >= -1e-12)

    def test_mixed_partition_dispatch(self, rng):
        grid = unit_grid([3, 3])
        vals = random_conservative_values(grid, rng)
        flags = np.array([True, False, False, True])  # cells (0,0),(1,0),(0,1),(1,1)
        um = PlaUtility(grid, vals, mixed_partition(flags))
        u1 = PlaUtility(grid, vals, TYPE1)
        u2 = PlaUtility(grid, vals, TYPE2)
        for _ in range(100):
            p = rng.random(2)
            cell = locate_cell(grid, p)
            flat = cell[0] + 2 * cell[1]
            want = u1(p) if flags[flat] else u2(p)
            assert um(p) == pytest.approx(want, abs=1e-12)


class TestCoefficientVector:
    def test_gridpoint_single_entry(self, grid33):
        row = coefficient_vector(grid33, [0.5, 0.5])
        assert row == {grid33.node_id((1, 1)): pytest.approx(1.0)}

    def test_known_weights(self, grid22):
        row = coefficient_vector(grid22, [0.5, 0.25])
        assert row[grid22.node_id((0, 0))] == pytest.approx(0.5)
        assert row[grid22.node_id((1, 0))] == pytest.approx(0.25)
        assert row[grid22.node_id((1, 1))] == pytest.approx(0.25)

    @given(st.integers(0, 1000))
    def test_dot_equals_eval(self, k):
        rng = np.random.default_rng(k)
        grid = grid_from_lists([0, 0.3, 1], [0, 0.6, 1])
        vals = random_conservative_values(grid, rng)
        for part in (TYPE1, TYPE2):
            u = PlaUtility(grid, vals, part)
            p = rng.random(2)
            row = coefficient_vector(grid, p, part)
            assert sum(w * vals[i] for i, w in row.items()) == pytest.approx(
                u(p), abs=1e-12
            )
            assert len(row) <= 3


class TestCheckShape:
    def test_clean_conservative_vector(self, grid22):
        u = PlaUtility(grid22, np.array([0.0, 0.6, 0.6, 1.0]))
        spec = ShapeSpec(lipschitz=1.0, curvature=())
        assert check_shape(u, spec) == []

    def test_monotonicity_violation_named(self, grid22):
        u = PlaUtility(grid22, np.array([0.0, 1.0, 0.5, 0.9]))
        spec = ShapeSpec(lipschitz=None, conservative=False, curvature=())
        fams = {v.family for v in check_shape(u, spec)}
        assert "monotone[1]" in fams  # u(1,0)=1 > u(1,1)=0.9 along attribute 2

    def test_conservativity_violation(self, grid22):
        u = PlaUtility(grid22, np.array([0.0, 0.4, 0.4, 1.0]))
        spec = ShapeSpec(lipschitz=None, curvature=())
        viols = check_shape(u, spec)
        assert [v.family for v in viols] == ["conservative"]
        assert viols[0].amount == pytest.approx(0.2)

    def test_lipschitz_consistency_property(self, rng):
        grid = grid_from_lists([0, 0.5, 1], [0, 0.25, 1])
        spec = ShapeSpec(lipschitz=1.0, curvature=())
        for _ in range(30):
            vals = random_conservative_values(grid, rng)
            u = PlaUtility(grid, vals)
            if check_shape(u, spec):
                continue
            p, q = rng.random(2), rng.random(2)
            assert abs(u(p) - u(q)) <= 1.0 * np.abs(p - q).sum() + 1e-10

    def test_curvature_families(self):
        grid = unit_grid([3, 2])
        convex_vals = np.array([0.0, 0.1, 0.5, 0.4, 0.6, 1.0])
        u = PlaUtility(grid, convex_vals)
        ok = ShapeSpec(lipschitz=None, conservative=False, curvature=("convex", None))
        assert check_shape(u, ok) == []
        bad = ShapeSpec(lipschitz=None, conservative=False, curvature=("concave", None))
        assert any(v.family == "curvature[0]" for v in check_shape(u, bad))


class TestInterpolate:
    def test_walkthrough_oracle_values(self, walkthrough_grid, true_utility):
        u = interpolate_from_function(walkthrough_grid, true_utility)
        # node values equal the oracle at the gridpoints
        assert u((0.0, 0.3706)) == pytest.approx(0.252, abs=5e-4)
        assert u((1.0, 0.0)) == pytest.approx(0.712, abs=5e-4)

    def test_normalize_rescales_corners(self, walkthrough_grid):
        u = interpolate_from_function(
            walkthrough_grid, lambda x, y: 3.0 + 2.0 * (x + y), normalize=True
        )
        assert u.values[0] == pytest.approx(0.0)
        assert u.values[-1] == pytest.approx(1.0)

    def test_constant_oracle_degenerate(self, walkthrough_grid):
        with pytest.raises(DegenerateRescale):
            interpolate_from_function(walkthrough_grid, lambda x, y: 7.0, normalize=True)


class TestSupDistance:
    def test_zero_for_identical(self, grid22):
        u = PlaUtility(grid22, np.array([0.0, 0.6, 0.6, 1.0]))
        assert sup_distance(u, u) == 0.0

    def test_max_abs_node_difference(self, grid22):
        a = PlaUtility(grid22, np.array([0.0, 0.6, 0.6, 1.0]))
        b = PlaUtility(grid22, np.array([0.0, 0.62, 0.55, 1.0]))
        assert sup_distance(a, b) == pytest.approx(0.05)

    def test_grid_mismatch(self, grid22, grid33):
        a = PlaUtility(grid22, np.array([0.0, 0.6, 0.6, 1.0]))
        b = PlaUtility(grid33, np.zeros(9))
        with pytest.raises(GridMismatch):
            sup_distance(a, b)
        c = PlaUtility(grid22, np.array([0.0, 0.6, 0.6, 1.0]), TYPE2)
        with pytest.raises(GridMismatch):
            sup_distance(a, c)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition("diag")
    with pytest.raises(ValueError):
        Partition("mixed")
