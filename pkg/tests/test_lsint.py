import numpy as np
import pytest

from conftest import random_conservative_values
from oracles import (
    box_partition,
    brute_ls_psi_df,
    brute_ls_u_dpsi,
    simple_psi_evaluator,
)
from upro.errors import OutcomeOffGrid
from upro.grids import grid_from_lists, unit_grid
from upro.lsint import (
    DiscreteLottery,
    GeneralPsi,
    LotteryPair,
    PreferenceConstraint,
    SimplePsi,
    certain,
    constraint_row,
    corner_lottery,
    ls_integral_pla,
    psi_box_mass,
    transform_by_parts,
)
from upro.pla import PlaUtility, TYPE1, TYPE2


UNIT_BOUNDS = ((0.0, 1.0), (0.0, 1.0))


class TestTransformByParts:
    def test_constant_vanishes(self):
        tp = transform_by_parts(lambda x, y: 3.7, UNIT_BOUNDS)
        for x, y in [(0.2, 0.9), (0.0, 0.0), (1.0, 0.5)]:
            assert tp.psi_hat(x, y) == 0.0
            assert tp.psi_1(x) == 0.0
            assert tp.psi_2(y) == 0.0

    def test_product_form(self):
        tp = transform_by_parts(lambda x, y: x * y, UNIT_BOUNDS)
        for x, y in [(0.3, 0.8), (0.0, 1.0)]:
            assert tp.psi_hat(x, y) == pytest.approx(1 - x - y + x * y)

    def test_single_variable_reduces_to_boundary(self):
        tp = transform_by_parts(lambda x, y: x, UNIT_BOUNDS)
        for t in np.linspace(0, 1, 7):
            assert tp.psi_hat(t, 0.5) == pytest.approx(0.0, abs=1e-15)
            assert tp.psi_1(t) == pytest.approx(0.0, abs=1e-15)
            assert tp.psi_2(t) == pytest.approx(0.0, abs=1e-15)


class TestLotteryRows:
    def test_expectation_difference(self, walkthrough_grid):
        risky = corner_lottery(walkthrough_grid, 0.5)
        sure = certain([0.0, 0.3706])
        row = constraint_row(
            walkthrough_grid, PreferenceConstraint(LotteryPair(sure, risky), 0.0)
        )
        dense = row.dense(walkthrough_grid.node_count)
        assert dense[walkthrough_grid.node_id((0, 0))] == pytest.approx(0.5)
        assert dense[walkthrough_grid.node_id((1, 2))] == pytest.approx(0.5)
        assert dense[walkthrough_grid.node_id((0, 1))] == pytest.approx(-1.0)
        assert row.rhs == 0.0

    def test_off_grid_outcome_raises(self, walkthrough_grid):
        pref = PreferenceConstraint(
            LotteryPair(certain([0.5, 0.5]), corner_lottery(walkthrough_grid, 0.3))
        )
        with pytest.raises(OutcomeOffGrid):
            constraint_row(walkthrough_grid, pref)

    def test_total_box_mass_is_zero(self, walkthrough_grid):
        pref = PreferenceConstraint(
            LotteryPair(certain([0.0, 1.0]), corner_lottery(walkthrough_grid, 0.25))
        )
        assert psi_box_mass(walkthrough_grid, pref) == 0.0


class TestSimplePsiRows:
    def test_single_cell_has_no_interior_mass(self, grid22):
        row = constraint_row(
            grid22, PreferenceConstraint(SimplePsi(np.array([[2.5]])), 1.0)
        )
        assert row.indices.size == 0

    def test_interior_point_mass(self, grid33):
        c = np.array([[1.0, 0.0], [0.0, 0.0]])
        row = constraint_row(grid33, PreferenceConstraint(SimplePsi(c), 0.0))
        dense = row.dense(9)
        # mass at the single interior node = c11 - c01 - c10 + c00
        assert dense[grid33.node_id((1, 1))] == pytest.approx(1.0)
        assert np.count_nonzero(dense) == 1

    def test_partition_independence(self, grid33, rng):
        c = rng.normal(size=(2, 2))
        pref = PreferenceConstraint(SimplePsi(c), 0.3)
        r1 = constraint_row(grid33, pref, TYPE1).dense(9)
        r2 = constraint_row(grid33, pref, TYPE2).dense(9)
        assert np.allclose(r1, r2)

    def test_row_matches_brute_force_exactly(self, rng):
        grid = grid_from_lists([0, 0.35, 1], [0, 0.6, 1])
        xs = box_partition(grid.coords[0], 40)
        ys = box_partition(grid.coords[1], 40)
        for _ in range(25):
            c = rng.normal(size=(2, 2))
            pref = PreferenceConstraint(SimplePsi(c), 0.0)
            row = constraint_row(grid, pref)
            psi = simple_psi_evaluator(grid, c)
            for part in (TYPE1, TYPE2):
                vals = random_conservative_values(grid, rng)
                u = PlaUtility(grid, vals, part)
                brute = brute_ls_u_dpsi(
                    lambda x, y: u.eval_many(np.stack([x, y], axis=-1).reshape(-1, 2)).reshape(
                        x.shape
                    ),
                    psi,
                    xs,
                    ys,
                )
                assert row.dot(vals) == pytest.approx(brute, abs=1e-9)

    def test_linearity_in_psi(self, grid33, rng):
        c = rng.normal(size=(2, 2))
        r1 = constraint_row(grid33, PreferenceConstraint(SimplePsi(c), 0.0)).dense(9)
        r2 = constraint_row(grid33, PreferenceConstraint(SimplePsi(3.0 * c), 0.0)).dense(9)
        assert np.allclose(r2, 3.0 * r1)


class TestGeneralPsiRows:
    def test_constant_gives_zero_row(self, grid33):
        row = constraint_row(
            grid33, PreferenceConstraint(GeneralPsi(lambda x, y: 1.0), 0.0)
        )
        assert row.indices.size == 0 or np.allclose(row.coeffs, 0.0)

    @pytest.mark.parametrize("part", [TYPE1, TYPE2])
    def test_smooth_psi_matches_stieltjes_oracle(self, part, rng):
        grid = grid_from_lists([0, 0.4, 1], [0, 0.5, 1])
        psi = lambda x, y: np.sin(2.1 * x) * (y + 0.3) + 0.2 * x
        pref = PreferenceConstraint(GeneralPsi(psi), 0.0)
        row = constraint_row(grid, pref, part)
        xs = box_partition(grid.coords[0], 150)
        ys = box_partition(grid.coords[1], 150)
        for _ in range(5):
            vals = random_conservative_values(grid, rng)
            u = PlaUtility(grid, vals, part)
            brute = brute_ls_u_dpsi(
                lambda x, y: u.eval_many(
                    np.stack([x, y], axis=-1).reshape(-1, 2)
                ).reshape(x.shape),
                psi,
                xs,
                ys,
                tag="center",
            )
            assert row.dot(vals) == pytest.approx(brute, abs=1e-4)


class TestLsIntegralPla:
    def test_constant_psi_total_measure(self):
        corners = np.array([[0.0, 0.3], [0.5, 0.9]])  # [[F(a0,b0),F(a0,b1)],[F(a1,b0),F(a1,b1)]]
        val = ls_integral_pla(UNIT_BOUNDS, corners, lambda x, y: 1.0)
        assert val == pytest.approx(0.9 - 0.3 - 0.5)

    def test_linear_psi_halves(self):
        corners = np.array([[0.0, 0.3], [0.5, 0.9]])
        val = ls_integral_pla(UNIT_BOUNDS, corners, lambda x, y: x)
        assert val == pytest.approx((0.9 - 0.3 - 0.5) / 2.0)

    @pytest.mark.parametrize("diagonal", ["main", "counter"])
    def test_against_brute_force(self, diagonal, rng):
        from upro.grids import grid_from_lists
        from upro.pla import TYPE1 as P1, TYPE2 as P2

        part = P1 if diagonal == "main" else P2
        for _ in range(50):
            rect = ((0.0, 1.0), (0.0, 1.0))
            vals = random_conservative_values(unit_grid([2, 2]), rng)
            u = PlaUtility(unit_grid([2, 2]), vals, part)
            corners = np.array([[vals[0], vals[2]], [vals[1], vals[3]]])
            a, b, c = rng.random(3)
            psi = lambda x, y: np.sin(3 * a * x + b) + c * y * y
            got = ls_integral_pla(rect, corners, psi, diagonal)
            want = brute_ls_psi_df(
                psi,
                lambda x, y: u.eval_many(
                    np.stack([x, y], axis=-1).reshape(-1, 2)
                ).reshape(x.shape),
                rect,
                400,
            )
            assert got == pytest.approx(want, rel=1e-3, abs=2e-4)


class TestPropagationIntoPolytope:
    def test_members_satisfy_original_integrals(self, rng):
        """Sampled feasible vectors respect the continuous inequality they
        were assembled from (the exactness half of the construction)."""
        from upro.ambiguity import AmbiguitySpec, assemble, feasibility
        from upro.pla import ShapeSpec

        grid = grid_from_lists([0, 0.5, 1], [0, 0.5, 1])
        c = rng.normal(size=(2, 2))
        pref = PreferenceConstraint(SimplePsi(c), 0.15)
        spec = AmbiguitySpec(
            grid,
            ShapeSpec(lipschitz=1.0, curvature=()),
            (pref,),
        )
        res = feasibility(spec)
        assert res.feasible
        u = res.witness
        psi = simple_psi_evaluator(grid, c)
        xs = box_partition(grid.coords[0], 50)
        ys = box_partition(grid.coords[1], 50)
        brute = brute_ls_u_dpsi(
            lambda x, y: u.eval_many(np.stack([x, y], axis=-1).reshape(-1, 2)).reshape(
                x.shape
            ),
            psi,
            xs,
            ys,
        )
        assert brute <= 0.15 + 1e-8
