"""Solver-agnostic program representation and interchangeable backends.

``ProgramIR`` captures a linear or mixed-binary program (sparse rows with
senses, variable bounds, integrality mask).  Two backends ship with the
package:

* ``highs`` (default): scipy's HiGHS interface, used for anything sizable;
* ``dense``: a self-contained two-phase dense simplex with Bland's rule
  plus a best-first branch-and-bound, deterministic and dependency-free,
  kept for small fixtures and cross-checking.

External solvers can be registered under new names; ``verify_backend``
runs a certified fixture battery against any backend and raises
``ContractViolation`` on disagreement.
"""

from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .errors import ContractViolation

LESS, EQUAL, GREATER = "<", "=", ">"


@dataclass(frozen=True)
class ProgramIR:
    """min/max  c.x  subject to sparse rows with senses and box bounds."""

    sense: str
    c: np.ndarray
    A: sp.csr_matrix
    row_senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    name: str = "program"

    def __post_init__(self) -> None:
        n = self.c.shape[0]
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if self.A.shape[1] != n:
            raise ValueError("column count mismatch")
        if not (self.A.shape[0] == self.row_senses.shape[0] == self.rhs.shape[0]):
            raise ValueError("row count mismatch")
        if self.lb.shape != (n,) or self.ub.shape != (n,) or self.integrality.shape != (n,):
            raise ValueError("bound/integrality length mismatch")
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.A.data)):
            raise ValueError("coefficients must be finite")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite")

    @property
    def n_vars(self) -> int:
        return int(self.c.shape[0])

    @property
    def n_rows(self) -> int:
        return int(self.A.shape[0])

    def is_lp(self) -> bool:
        return not bool(self.integrality.any())


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    value: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    dual_value: float = math.nan
    gap: float = math.nan
    nit: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def make_ir(
    sense: str,
    c: np.ndarray,
    rows: sp.spmatrix | np.ndarray,
    senses: list[str] | np.ndarray,
    rhs: np.ndarray,
    lb: np.ndarray | float = 0.0,
    ub: np.ndarray | float = 1.0,
    integrality: np.ndarray | None = None,
    name: str = "program",
) -> ProgramIR:
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    A = sp.csr_matrix(rows, shape=(np.shape(rhs)[0], n) if np.shape(rhs)[0] else (0, n))
    lb = np.full(n, lb, dtype=float) if np.isscalar(lb) else np.asarray(lb, dtype=float)
    ub = np.full(n, ub, dtype=float) if np.isscalar(ub) else np.asarray(ub, dtype=float)
    integ = (
        np.zeros(n, dtype=bool)
        if integrality is None
        else np.asarray(integrality, dtype=bool)
    )
    return ProgramIR(
        sense,
        c,
        A,
        np.asarray(list(senses), dtype="U1"),
        np.asarray(rhs, dtype=float),
        lb,
        ub,
        integ,
        name,
    )


class Backend(Protocol):
    def solve_lp(self, ir: ProgramIR) -> SolveResult: ...

    def solve_mip(self, ir: ProgramIR) -> SolveResult: ...


_BACKENDS: dict[str, Backend] = {}


def register_backend(name: str, backend: Backend) -> None:
    _BACKENDS[name] = backend


def get_backend(name: str | None = None) -> Backend:
    if name is None:
        name = os.environ.get("UPRO_BACKEND", "highs")
    return _BACKENDS[name]


def solve_lp(ir: ProgramIR, backend: str | Backend | None = None) -> SolveResult:
    be = backend if not isinstance(backend, (str, type(None))) else get_backend(backend)
    return be.solve_lp(ir)


def solve_mip(ir: ProgramIR, backend: str | Backend | None = None) -> SolveResult:
    be = backend if not isinstance(backend, (str, type(None))) else get_backend(backend)
    if ir.is_lp():
        return be.solve_lp(ir)
    return be.solve_mip(ir)


# ---------------------------------------------------------------------------
# HiGHS backend (scipy)
# ---------------------------------------------------------------------------


class HighsBackend:
    """LP via ``scipy.optimize.linprog`` and MIP via ``scipy.optimize.milp``."""

    def solve_lp(self, ir: ProgramIR) -> SolveResult:
        flip = -1.0 if ir.sense == "max" else 1.0
        lt = ir.row_senses == LESS
        gt = ir.row_senses == GREATER
        eq = ir.row_senses == EQUAL
        A_ub = sp.vstack([ir.A[lt], -ir.A[gt]]).tocsr() if (lt.any() or gt.any()) else None
        b_ub = np.concatenate([ir.rhs[lt], -ir.rhs[gt]]) if A_ub is not None else None
        A_eq = ir.A[eq] if eq.any() else None
        b_eq = ir.rhs[eq] if A_eq is not None else None
        res = linprog(
            flip * ir.c,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=np.stack([ir.lb, ir.ub], axis=1),
            method="highs",
        )
        status = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}.get(
            res.status, "infeasible"
        )
        if status != "optimal":
            return SolveResult(status, nit=int(getattr(res, "nit", 0) or 0))
        duals = np.zeros(ir.n_rows)
        if A_ub is not None:
            mult = res.ineqlin.marginals
            n_lt = int(lt.sum())
            duals[lt] = mult[:n_lt]
            duals[gt] = -mult[n_lt:]
        if A_eq is not None:
            duals[eq] = res.eqlin.marginals
        lb_term = res.lower.marginals * np.where(np.isfinite(ir.lb), ir.lb, 0.0)
        ub_term = res.upper.marginals * np.where(np.isfinite(ir.ub), ir.ub, 0.0)
        dual_value = float(duals @ ir.rhs + lb_term.sum() + ub_term.sum())
        return SolveResult(
            "optimal",
            value=flip * float(res.fun),
            x=np.asarray(res.x),
            duals=flip * duals,
            dual_value=flip * dual_value,
            nit=int(getattr(res, "nit", 0) or 0),
        )

    def solve_mip(self, ir: ProgramIR) -> SolveResult:
        flip = -1.0 if ir.sense == "max" else 1.0
        lo = np.where(ir.row_senses == LESS, -np.inf, ir.rhs)
        hi = np.where(ir.row_senses == GREATER, np.inf, ir.rhs)
        constraints = (
            LinearConstraint(ir.A, lo, hi) if ir.n_rows else None
        )
        res = milp(
            flip * ir.c,
            constraints=constraints,
            integrality=ir.integrality.astype(int),
            bounds=Bounds(ir.lb, ir.ub),
        )
        if res.status == 0:
            return SolveResult(
                "optimal",
                value=flip * float(res.fun),
                x=np.asarray(res.x),
                gap=float(res.mip_gap if res.mip_gap is not None else 0.0),
            )
        if res.status == 2:
            return SolveResult("infeasible")
        if res.status == 3:
            return SolveResult("unbounded")
        out = SolveResult("iteration_limit")
        if res.x is not None:
            out.x = np.asarray(res.x)
            out.value = flip * float(res.fun)
            out.gap = float(res.mip_gap or math.nan)
        return out


# ---------------------------------------------------------------------------
# Bundled dense simplex + branch and bound
# ---------------------------------------------------------------------------


class DenseSimplexBackend:
    """Two-phase dense simplex (Bland's rule) with best-first branch and bound.

    Deterministic: identical programs produce identical primal solutions.
    Intended for desk-scale fixtures; use the HiGHS backend for anything
    with more than a few hundred variables.
    """

    def __init__(self, tol: float = 1e-9, node_limit: int = 200_000) -> None:
        self.tol = tol
        self.node_limit = node_limit

    # -- LP ---------------------------------------------------------------

    def solve_lp(self, ir: ProgramIR) -> SolveResult:
        flip = -1.0 if ir.sense == "max" else 1.0
        c0 = flip * ir.c
        n = ir.n_vars

        # Variable transform: finite lower bounds shift to 0, free variables
        # split into a difference of nonnegatives.
        shift = np.where(np.isfinite(ir.lb), ir.lb, 0.0)
        split = ~np.isfinite(ir.lb)
        col_of = np.arange(n)
        neg_col = np.full(n, -1)
        ncols = n + int(split.sum())
        k = n
        for j in np.nonzero(split)[0]:
            neg_col[j] = k
            k += 1

        rows: list[np.ndarray] = []
        rhs: list[float] = []
        senses: list[str] = []
        A = ir.A.toarray() if ir.n_rows else np.zeros((0, n))
        base_rhs = ir.rhs - A @ shift
        for i in range(ir.n_rows):
            r = np.zeros(ncols)
            r[col_of] = A[i]
            r[neg_col[split]] = -A[i, split]
            rows.append(r)
            rhs.append(float(base_rhs[i]))
            senses.append(str(ir.row_senses[i]))
        for j in range(n):
            if np.isfinite(ir.ub[j]):
                r = np.zeros(ncols)
                r[j] = 1.0
                if split[j]:
                    r[neg_col[j]] = -1.0
                rows.append(r)
                rhs.append(float(ir.ub[j] - shift[j]))
                senses.append(LESS)
        c = np.zeros(ncols)
        c[col_of] = c0
        c[neg_col[split]] = -c0[split]

        value, x_std, y, status, nit = _two_phase_simplex(
            np.array(rows) if rows else np.zeros((0, ncols)),
            np.array(rhs),
            np.array(senses, dtype="U1"),
            c,
            self.tol,
        )
        if status != "optimal":
            return SolveResult(status, nit=nit)
        x = x_std[:n] + shift
        x[split] = x_std[:n][split] - x_std[neg_col[split]]
        duals = flip * y[: ir.n_rows]
        dual_value = flip * (float(np.dot(y, np.array(rhs))) + float(np.dot(c0, shift)))
        return SolveResult(
            "optimal",
            value=flip * (value + float(np.dot(c0, shift))),
            x=x,
            duals=duals,
            dual_value=dual_value,
            nit=nit,
        )

    # -- MIP ----------------------------------------------------------------

    def solve_mip(self, ir: ProgramIR) -> SolveResult:
        flip = -1.0 if ir.sense == "max" else 1.0
        base = replace(ir, sense="min", c=flip * ir.c)
        mask = np.nonzero(ir.integrality)[0]
        int_tol = 1e-6

        counter = 0
        heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
        relax = replace(base, integrality=np.zeros(base.n_vars, dtype=bool))
        root = self.solve_lp(relax)
        if root.status != "optimal":
            return SolveResult(root.status)
        heapq.heappush(heap, (root.value, counter, base.lb.copy(), base.ub.copy()))
        best_x: np.ndarray | None = None
        best_val = math.inf
        nodes = 0
        while heap:
            bound, _, lb, ub = heapq.heappop(heap)
            if bound >= best_val - 1e-9:
                continue
            nodes += 1
            if nodes > self.node_limit:
                gap = best_val - bound
                out = SolveResult("iteration_limit", gap=gap, nit=nodes)
                if best_x is not None:
                    out.x = best_x
                    out.value = flip * best_val
                return out
            res = self.solve_lp(replace(relax, lb=lb, ub=ub))
            if res.status != "optimal" or res.value >= best_val - 1e-9:
                continue
            frac = np.abs(res.x[mask] - np.round(res.x[mask]))
            if frac.size == 0 or frac.max() <= int_tol:
                x = res.x.copy()
                x[mask] = np.round(x[mask])
                if res.value < best_val - 1e-12:
                    best_val = res.value
                    best_x = x
                continue
            j = mask[int(np.argmax(np.minimum(frac, 1 - frac)))]
            v = res.x[j]
            down = (lb.copy(), ub.copy())
            down[1][j] = math.floor(v)
            up = (lb.copy(), ub.copy())
            up[0][j] = math.ceil(v)
            for lb2, ub2 in (down, up):
                if lb2[j] > ub2[j]:
                    continue
                counter += 1
                heapq.heappush(heap, (res.value, counter, lb2, ub2))
        if best_x is None:
            return SolveResult("infeasible", nit=nodes)
        return SolveResult("optimal", value=flip * best_val, x=best_x, gap=0.0, nit=nodes)


def _two_phase_simplex(
    A: np.ndarray,
    b: np.ndarray,
    senses: np.ndarray,
    c: np.ndarray,
    tol: float,
) -> tuple[float, np.ndarray, np.ndarray, str, int]:
    """Textbook dense two-phase simplex; Bland's rule, so deterministic.

    Returns (value, x, row duals, status, iterations) for
    min c.x  s.t.  A x (senses) b,  x >= 0.
    """
    m, n = A.shape
    # Row scaling for conditioning only.
    scale = np.maximum(np.abs(A).max(axis=1, initial=0.0), 1e-12)
    A = A / scale[:, None]
    b = b / scale
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)
    flipped = senses.copy()
    flipped[neg & (senses == LESS)] = GREATER
    flipped[neg & (senses == GREATER)] = LESS

    n_slack = int((flipped == LESS).sum() + (flipped == GREATER).sum())
    need_art = flipped != LESS
    n_art = int(need_art.sum())
    T = np.zeros((m, n + n_slack + n_art))
    T[:, :n] = A
    slack_col = {}
    k = n
    for i in range(m):
        if flipped[i] == LESS:
            T[i, k] = 1.0
            slack_col[i] = k
            k += 1
        elif flipped[i] == GREATER:
            T[i, k] = -1.0
            slack_col[i] = k
            k += 1
    art_col = {}
    for i in range(m):
        if need_art[i]:
            T[i, k] = 1.0
            art_col[i] = k
            k += 1
    basis = np.array(
        [art_col[i] if need_art[i] else slack_col[i] for i in range(m)], dtype=int
    )

    nit = 0

    def run_phase(cost: np.ndarray, allowed: int) -> str:
        nonlocal nit, basis, T, b
        while True:
            nit += 1
            if nit > 50_000:
                return "iteration_limit"
            y = _dual_from_basis(T, basis, cost)
            red = cost[:allowed] - y @ T[:, :allowed]
            enter = -1
            for j in range(allowed):  # Bland: lowest eligible index
                if red[j] < -tol and j not in basis:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            B = T[:, basis]
            try:
                d = np.linalg.solve(B, T[:, enter])
                xb = np.linalg.solve(B, b)
            except np.linalg.LinAlgError:
                return "infeasible"
            pos = d > tol
            if not pos.any():
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[pos] = xb[pos] / d[pos]
            rmin = ratios.min()
            leave = -1
            for i in range(m):  # Bland on ties: lowest basis index leaves
                if ratios[i] <= rmin + tol:
                    if leave < 0 or basis[i] < basis[leave]:
                        leave = i
            basis[leave] = enter

    total = T.shape[1]
    if n_art:
        cost1 = np.zeros(total)
        for i in art_col.values():
            cost1[i] = 1.0
        status = run_phase(cost1, total)
        if status != "optimal":
            return math.nan, np.zeros(n), np.zeros(m), status, nit
        xb = np.linalg.solve(T[:, basis], b)
        if float(cost1[basis] @ xb) > 1e-7:
            return math.nan, np.zeros(n), np.zeros(m), "infeasible", nit
        # Drive remaining artificials out of the basis where possible.
        art_set = set(art_col.values())
        for i in range(m):
            if basis[i] in art_set:
                B = T[:, basis]
                for j in range(n + n_slack):
                    if j in basis:
                        continue
                    d = np.linalg.solve(B, T[:, j])
                    if abs(d[i]) > 1e-9:
                        basis[i] = j
                        break

    cost2 = np.zeros(total)
    cost2[:n] = c
    status = run_phase(cost2, n + n_slack)
    if status != "optimal":
        return math.nan, np.zeros(n), np.zeros(m), status, nit
    xb = np.linalg.solve(T[:, basis], b)
    x = np.zeros(total)
    x[basis] = xb
    y = _dual_from_basis(T, basis, cost2)
    # Undo row scaling and sign flips in the duals.
    y_orig = y / scale
    y_orig[neg] *= -1.0
    return float(cost2 @ x), x[:n], y_orig, "optimal", nit


def _dual_from_basis(T: np.ndarray, basis: np.ndarray, cost: np.ndarray) -> np.ndarray:
    B = T[:, basis]
    return np.linalg.solve(B.T, cost[basis])


# ---------------------------------------------------------------------------
# LP-format export and the backend contract battery
# ---------------------------------------------------------------------------


def write_lp(ir: ProgramIR, path: str) -> None:
    """Serialize to CPLEX LP text (names v0..vN / c0..cM, 15 sig digits)."""

    def num(v: float) -> str:
        return f"{v:.15g}"

    def expr(coeffs: np.ndarray, idxs: np.ndarray) -> str:
        parts = []
        for j, a in zip(idxs, coeffs):
            sign = "+" if a >= 0 else "-"
            parts.append(f"{sign} {num(abs(a))} v{j}")
        return " ".join(parts) if parts else "0 v0"

    lines = ["Maximize" if ir.sense == "max" else "Minimize"]
    nz = np.nonzero(ir.c)[0]
    lines.append(" obj: " + expr(ir.c[nz], nz))
    lines.append("Subject To")
    Acsr = ir.A.tocsr()
    op = {LESS: "<=", EQUAL: "=", GREATER: ">="}
    for i in range(ir.n_rows):
        sl = slice(Acsr.indptr[i], Acsr.indptr[i + 1])
        lines.append(
            f" c{i}: "
            + expr(Acsr.data[sl], Acsr.indices[sl])
            + f" {op[str(ir.row_senses[i])]} {num(ir.rhs[i])}"
        )
    lines.append("Bounds")
    for j in range(ir.n_vars):
        lo = "-inf" if not np.isfinite(ir.lb[j]) else num(ir.lb[j])
        hi = "+inf" if not np.isfinite(ir.ub[j]) else num(ir.ub[j])
        lines.append(f" {lo} <= v{j} <= {hi}")
    binaries = np.nonzero(ir.integrality)[0]
    if binaries.size:
        lines.append("Binary")
        lines.append(" " + " ".join(f"v{j}" for j in binaries))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def contract_fixtures() -> list[tuple[ProgramIR, str, float | None]]:
    """Certified instances: (program, expected status, expected value)."""
    fixtures = []
    fixtures.append(
        (
            make_ir("min", [1.0], np.array([[1.0]]), [GREATER], [3.0], 0.0, 10.0),
            "optimal",
            3.0,
        )
    )
    fixtures.append(
        (
            make_ir(
                "max",
                [1.0, 1.0],
                np.array([[1.0, 1.0]]),
                [LESS],
                [1.0],
                0.0,
                np.array([np.inf, np.inf]),
            ),
            "optimal",
            1.0,
        )
    )
    fixtures.append(
        (
            make_ir(
                "min",
                [0.0, 0.0],
                np.array([[1.0, 0.0], [1.0, 0.0]]),
                [GREATER, LESS],
                [2.0, 1.0],
                0.0,
                5.0,
            ),
            "infeasible",
            None,
        )
    )
    fixtures.append(
        (
            make_ir(
                "max",
                [3.0, 2.0],
                np.array([[1.0, 1.0]]),
                [LESS],
                [1.0],
                0.0,
                1.0,
                integrality=np.array([True, True]),
            ),
            "optimal",
            3.0,
        )
    )
    return fixtures


def verify_backend(backend: Backend, tol: float = 1e-7) -> None:
    for ir, status, value in contract_fixtures():
        res = solve_mip(ir, backend) if not ir.is_lp() else backend.solve_lp(ir)
        if res.status != status:
            raise ContractViolation(
                f"{ir.name}: expected status {status}, got {res.status}"
            )
        if value is not None and abs(res.value - value) > tol:
            raise ContractViolation(f"{ir.name}: expected {value}, got {res.value}")


register_backend("highs", HighsBackend())
register_backend("dense", DenseSimplexBackend())
