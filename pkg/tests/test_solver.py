import numpy as np
import pytest

from oracles import lp_by_vertex_enumeration, mip_by_enumeration
from upro.errors import ContractViolation
from upro.solver import (
    DenseSimplexBackend,
    GREATER,
    HighsBackend,
    LESS,
    contract_fixtures,
    get_backend,
    make_ir,
    register_backend,
    solve_lp,
    solve_mip,
    verify_backend,
    write_lp,
)

BACKENDS = ["highs", "dense"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


class TestLp:
    def test_min_bound(self, backend):
        ir = make_ir("min", [1.0], np.array([[1.0]]), [GREATER], [3.0], 0.0, 10.0)
        res = solve_lp(ir, backend)
        assert res.ok and res.value == pytest.approx(3.0, abs=1e-9)

    def test_max_budget(self, backend):
        ir = make_ir("max", [1.0, 1.0], np.array([[1.0, 1.0]]), [LESS], [1.0], 0.0, 1.0)
        res = solve_lp(ir, backend)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_random_lps_against_vertex_enumeration(self, backend, rng):
        for _ in range(25):
            n, m = 4, 5
            c = rng.normal(size=n)
            A = rng.normal(size=(m, n))
            x0 = rng.random(n)
            b = A @ x0 + rng.random(m)  # guarantees feasibility of x0
            ir = make_ir("min", c, A, [LESS] * m, b, 0.0, 1.0)
            res = solve_lp(ir, backend)
            want = lp_by_vertex_enumeration(c, A, b, np.zeros(n), np.ones(n))
            assert res.ok
            assert res.value == pytest.approx(want, abs=1e-8)

    def test_weak_duality_at_optimum(self, backend, rng):
        for _ in range(10):
            n, m = 5, 4
            c = rng.normal(size=n)
            A = rng.normal(size=(m, n))
            b = A @ rng.random(n) + rng.random(m)
            ir = make_ir("min", c, A, [LESS] * m, b, 0.0, 1.0)
            res = solve_lp(ir, backend)
            assert res.ok
            assert res.value == pytest.approx(res.dual_value, abs=1e-7)
            assert np.all(A @ res.x <= b + 1e-8)  # primal feasibility
            assert np.all(res.x >= -1e-9) and np.all(res.x <= 1 + 1e-9)

    def test_infeasible_status(self, backend):
        ir = make_ir(
            "min",
            [0.0],
            np.array([[1.0], [1.0]]),
            [GREATER, LESS],
            [2.0, 1.0],
            0.0,
            5.0,
        )
        assert solve_lp(ir, backend).status == "infeasible"

    def test_unbounded_status(self, backend):
        ir = make_ir(
            "max", [1.0], np.zeros((0, 1)), [], [], 0.0, np.array([np.inf])
        )
        assert solve_lp(ir, backend).status == "unbounded"

    def test_free_variable_handling(self, backend):
        # max t s.t. t <= 0.3, t free
        ir = make_ir(
            "max",
            [1.0],
            np.array([[1.0]]),
            [LESS],
            [0.3],
            np.array([-np.inf]),
            np.array([np.inf]),
        )
        res = solve_lp(ir, backend)
        assert res.value == pytest.approx(0.3, abs=1e-9)


class TestDeterminism:
    def test_identical_program_identical_solution(self):
        rng = np.random.default_rng(7)
        c = rng.normal(size=6)
        A = rng.normal(size=(4, 6))
        b = A @ rng.random(6) + 0.5
        ir = make_ir("min", c, A, [LESS] * 4, b, 0.0, 1.0)
        be = DenseSimplexBackend()
        x1 = be.solve_lp(ir).x
        x2 = be.solve_lp(ir).x
        assert np.array_equal(x1, x2)


class TestMip:
    def test_knapsack(self, backend):
        ir = make_ir(
            "max",
            [3.0, 2.0],
            np.array([[1.0, 1.0]]),
            [LESS],
            [1.0],
            0.0,
            1.0,
            integrality=np.array([True, True]),
        )
        res = solve_mip(ir, backend)
        assert res.value == pytest.approx(3.0, abs=1e-8)

    def test_random_mips_against_enumeration(self, backend, rng):
        for _ in range(12):
            n = 8
            c = rng.normal(size=n)
            A = rng.normal(size=(4, n))
            b = A @ (rng.random(n) * 0.5) + rng.random(4)
            ir = make_ir(
                "min", c, A, [LESS] * 4, b, 0.0, 1.0,
                integrality=np.ones(n, dtype=bool),
            )
            res = solve_mip(ir, backend)
            want = mip_by_enumeration(c, A, b, np.zeros(n), np.ones(n), range(n))
            if np.isnan(want):
                assert res.status == "infeasible"
            else:
                assert res.value == pytest.approx(want, abs=1e-7)

    def test_relaxation_bounds_mip(self, backend, rng):
        c = rng.normal(size=6)
        A = rng.normal(size=(3, 6))
        b = A @ (rng.random(6) * 0.5) + 1.0
        integ = np.zeros(6, dtype=bool)
        integ[:4] = True
        ir = make_ir("max", c, A, [LESS] * 3, b, 0.0, 1.0, integrality=integ)
        relaxed = make_ir("max", c, A, [LESS] * 3, b, 0.0, 1.0)
        mip = solve_mip(ir, backend)
        lp = solve_lp(relaxed, backend)
        if mip.ok and lp.ok:
            assert lp.value >= mip.value - 1e-9


class TestBackendContract:
    def test_builtin_backends_pass(self):
        for name in BACKENDS:
            verify_backend(get_backend(name))

    def test_mock_backend_violation(self):
        class Liar:
            def solve_lp(self, ir):
                from upro.solver import SolveResult

                return SolveResult("infeasible")

            def solve_mip(self, ir):
                return self.solve_lp(ir)

        with pytest.raises(ContractViolation):
            verify_backend(Liar())

    def test_registration(self):
        probe = HighsBackend()
        register_backend("probe", probe)
        assert get_backend("probe") is probe

    def test_backends_agree_on_fixtures(self):
        for ir, status, value in contract_fixtures():
            r1 = solve_mip(ir, "highs")
            r2 = solve_mip(ir, "dense")
            assert r1.status == r2.status == status
            if value is not None:
                assert abs(r1.value - r2.value) < 1e-7


def test_write_lp_format(tmp_path):
    ir = make_ir(
        "min",
        [1.5, -2.0],
        np.array([[1.0, 1.0], [2.0, -1.0]]),
        [LESS, GREATER],
        [1.0, -0.5],
        0.0,
        1.0,
        integrality=np.array([False, True]),
    )
    path = tmp_path / "prog.lp"
    write_lp(ir, str(path))
    text = path.read_text()
    assert "Minimize" in text and "Subject To" in text
    assert "Binary" in text and "v1" in text
    assert "<= 1" in text and ">= -0.5" in text
