"""Assembling the utility ambiguity polytope and its error-bound diagnostics.

The ambiguity set over a grid is the polytope of node-value vectors that
satisfy every elicited preference row plus the structural rows (monotone,
Lipschitz, conservative, optional per-attribute curvature, normalization).
This module builds that linear system, answers feasibility questions, and
evaluates the mesh-size error-bound formulas used as diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import NonPositiveAlpha
from .grids import GridProduct
from .lsint import PreferenceConstraint, constraint_row, is_simple, psi_box_mass
from .pla import Partition, PlaUtility, ShapeSpec, TYPE1, sup_distance
from .solver import EQUAL, LESS, ProgramIR, make_ir, solve_lp

MARGIN_BOUND = 1e6


@dataclass(frozen=True)
class AmbiguitySpec:
    """Grid + structural assumptions + preference rows + partition choice."""

    grid: GridProduct
    shape: ShapeSpec
    prefs: tuple[PreferenceConstraint, ...] = ()
    partition: Partition = TYPE1

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefs", tuple(self.prefs))

    def with_prefs(self, prefs: Sequence[PreferenceConstraint]) -> "AmbiguitySpec":
        return AmbiguitySpec(self.grid, self.shape, tuple(prefs), self.partition)


@dataclass
class LinearSystem:
    """Inequality/equality rows over the node-value vector."""

    n: int
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    labels_ub: list[tuple[str, tuple]]
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    labels_eq: list[tuple[str, tuple]]
    n_pref: int
    quad_error: float = 0.0

    def to_ir(
        self,
        c: np.ndarray,
        sense: str = "min",
        extra_ub: tuple[sp.spmatrix, np.ndarray] | None = None,
        name: str = "ambiguity",
    ) -> ProgramIR:
        A = self.A_ub
        b = self.b_ub
        if extra_ub is not None:
            A = sp.vstack([A, extra_ub[0]]).tocsr()
            b = np.concatenate([b, extra_ub[1]])
        rows = sp.vstack([A, self.A_eq]).tocsr()
        senses = [LESS] * A.shape[0] + [EQUAL] * self.A_eq.shape[0]
        rhs = np.concatenate([b, self.b_eq])
        return make_ir(sense, c, rows, senses, rhs, 0.0, 1.0, name=name)

    def dump(self) -> str:
        """Readable row/sense/rhs listing for debugging."""
        lines = []
        for A, rhs, labels, op in (
            (self.A_ub, self.b_ub, self.labels_ub, "<="),
            (self.A_eq, self.b_eq, self.labels_eq, "=="),
        ):
            csr = A.tocsr()
            for i in range(A.shape[0]):
                sl = slice(csr.indptr[i], csr.indptr[i + 1])
                terms = " ".join(
                    f"{v:+.6g}*u[{j}]" for j, v in zip(csr.indices[sl], csr.data[sl])
                )
                lines.append(f"{labels[i][0]}{labels[i][1]}: {terms} {op} {rhs[i]:.15g}")
        return "\n".join(lines)


def _node_id_table(grid: GridProduct) -> np.ndarray:
    return np.arange(grid.node_count, dtype=np.int64).reshape(grid.shape, order="F")


def _take(ids: np.ndarray, axis: int, sl: slice) -> np.ndarray:
    cut = [slice(None)] * ids.ndim
    cut[axis] = sl
    return ids[tuple(cut)].ravel(order="F")


def assemble(spec: AmbiguitySpec) -> LinearSystem:
    """Every row of the polytope, preference rows first."""
    grid = spec.grid
    V = grid.node_count
    ids = _node_id_table(grid)
    data: list[float] = []
    rows_i: list[int] = []
    cols: list[int] = []
    rhs: list[float] = []
    labels: list[tuple[str, tuple]] = []
    quad_error = 0.0

    def add_row(idx: np.ndarray, coef: np.ndarray, b: float, label: tuple[str, tuple]) -> None:
        r = len(rhs)
        rows_i.extend([r] * len(idx))
        cols.extend(int(j) for j in idx)
        data.extend(float(v) for v in coef)
        rhs.append(b)
        labels.append(label)

    for l, pref in enumerate(spec.prefs):
        row = constraint_row(grid, pref, spec.partition)
        quad_error += row.quad_error
        add_row(row.indices, row.coeffs, row.rhs, ("pref", (l,)))
    n_pref = len(rhs)

    for a in range(grid.dims):
        prev = _take(ids, a, slice(None, -1))
        nxt = _take(ids, a, slice(1, None))
        gaps = np.diff(grid.coords[a])
        # per-edge gap, indexed by the edge's position along axis a
        axis_pos = _take(np.indices(grid.shape)[a], a, slice(None, -1))
        edge_gap = gaps[axis_pos]
        if spec.shape.monotone:
            for k, (p, q) in enumerate(zip(prev, nxt)):
                add_row(
                    np.array([p, q]), np.array([1.0, -1.0]), 0.0, ("monotone", (a, k))
                )
        if spec.shape.lipschitz is not None:
            L = spec.shape.lipschitz
            for k, (p, q) in enumerate(zip(prev, nxt)):
                add_row(
                    np.array([q, p]),
                    np.array([1.0, -1.0]),
                    L * float(edge_gap[k]),
                    ("lipschitz", (a, k)),
                )

    if spec.shape.conservative:
        if grid.dims != 2:
            raise ValueError("conservative rows are a 2-D notion")
        n1, n2 = grid.shape
        for i in range(n1 - 1):
            for j in range(n2 - 1):
                corners = [
                    grid.node_id((i, j)),
                    grid.node_id((i + 1, j + 1)),
                    grid.node_id((i, j + 1)),
                    grid.node_id((i + 1, j)),
                ]
                add_row(
                    np.array(corners),
                    np.array([1.0, 1.0, -1.0, -1.0]),
                    0.0,
                    ("conservative", (i, j)),
                )

    for a in range(grid.dims):
        curv = spec.shape.curvature_for(a)
        if curv is None or grid.shape[a] < 3:
            continue
        lo = _take(ids, a, slice(None, -2))
        mid = _take(ids, a, slice(1, -1))
        hi = _take(ids, a, slice(2, None))
        gaps = np.diff(grid.coords[a])
        axis_pos = _take(np.indices(grid.shape)[a], a, slice(None, -2))
        sign = 1.0 if curv == "concave" else -1.0
        for k in range(len(mid)):
            g0 = float(gaps[axis_pos[k]])
            g1 = float(gaps[axis_pos[k] + 1])
            # concave: (u_hi - u_mid)/g1 - (u_mid - u_lo)/g0 <= 0
            add_row(
                np.array([hi[k], mid[k], lo[k]]),
                sign * np.array([1.0 / g1, -1.0 / g1 - 1.0 / g0, 1.0 / g0]),
                0.0,
                (f"curvature-{curv}", (a, k)),
            )

    A_ub = sp.csr_matrix(
        (data, (rows_i, cols)), shape=(len(rhs), V)
    )
    b_ub = np.array(rhs)
    labels_ub = labels

    eq_rows = []
    eq_rhs = []
    eq_labels = []
    if spec.shape.normalized:
        eq_rows.append((0, 1.0))
        eq_rhs.append(0.0)
        eq_labels.append(("normalized-low", ()))
        eq_rows.append((V - 1, 1.0))
        eq_rhs.append(1.0)
        eq_labels.append(("normalized-high", ()))
    A_eq = sp.csr_matrix(
        (
            [v for _, v in eq_rows],
            ([k for k in range(len(eq_rows))], [j for j, _ in eq_rows]),
        ),
        shape=(len(eq_rows), V),
    )
    return LinearSystem(
        V, A_ub, b_ub, labels_ub, A_eq, np.array(eq_rhs), eq_labels, n_pref, quad_error
    )


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: PlaUtility | None = None
    certificate: list[tuple[str, tuple, float]] = field(default_factory=list)


def feasibility(
    spec: AmbiguitySpec, backend: str | None = None, system: LinearSystem | None = None
) -> FeasibilityResult:
    """Phase-1 check; on failure, reports the rows needing positive slack."""
    system = assemble(spec) if system is None else system
    V = system.n
    ir = system.to_ir(np.zeros(V), "min", name="phase1")
    res = solve_lp(ir, backend)
    if res.ok:
        return FeasibilityResult(True, PlaUtility(spec.grid, res.x, spec.partition))

    # Minimal-slack certificate: relax every row and minimize total slack.
    m_ub, m_eq = system.A_ub.shape[0], system.A_eq.shape[0]
    n = V + m_ub + 2 * m_eq
    c = np.concatenate([np.zeros(V), np.ones(m_ub + 2 * m_eq)])
    A = sp.hstack(
        [system.A_ub, -sp.eye(m_ub), sp.csr_matrix((m_ub, 2 * m_eq))]
    )
    Aeq = sp.hstack(
        [system.A_eq, sp.csr_matrix((m_eq, m_ub)), sp.eye(m_eq), -sp.eye(m_eq)]
    )
    rows = sp.vstack([A, Aeq]).tocsr()
    senses = [LESS] * m_ub + [EQUAL] * m_eq
    rhs = np.concatenate([system.b_ub, system.b_eq])
    lb = np.zeros(n)
    ub = np.concatenate([np.ones(V), np.full(m_ub + 2 * m_eq, np.inf)])
    relaxed = make_ir("min", c, rows, senses, rhs, lb, ub, name="phase1-slack")
    res2 = solve_lp(relaxed, backend)
    cert: list[tuple[str, tuple, float]] = []
    if res2.ok:
        slack = res2.x[V:]
        for i in range(m_ub):
            if slack[i] > 1e-8:
                cert.append((*system.labels_ub[i], float(slack[i])))
        for k in range(m_eq):
            s = float(slack[m_ub + 2 * k] + slack[m_ub + 2 * k + 1])
            if s > 1e-8:
                cert.append((*system.labels_eq[k], s))
    return FeasibilityResult(False, None, cert)


def slater_margin(
    spec: AmbiguitySpec, backend: str | None = None, system: LinearSystem | None = None
) -> float | None:
    """Largest t with every preference row satisfiable at slack >= t.

    None when the spec has no preference rows (vacuous margin).  The value
    may be <= 0 when the rows admit no strictly interior utility.
    """
    point = slater_point(spec, backend, system)
    return None if point is None else point[0]


def slater_point(
    spec: AmbiguitySpec, backend: str | None = None, system: LinearSystem | None = None
) -> tuple[float, PlaUtility] | None:
    """The margin together with a utility attaining it (the pair the
    distance estimate of :func:`hoffman_bound` needs)."""
    system = assemble(spec) if system is None else system
    if system.n_pref == 0:
        return None
    V = system.n
    m_ub = system.A_ub.shape[0]
    t_col = np.zeros((m_ub, 1))
    t_col[: system.n_pref, 0] = 1.0
    A = sp.hstack([system.A_ub, sp.csr_matrix(t_col)])
    Aeq = sp.hstack([system.A_eq, sp.csr_matrix((system.A_eq.shape[0], 1))])
    rows = sp.vstack([A, Aeq]).tocsr()
    senses = [LESS] * m_ub + [EQUAL] * system.A_eq.shape[0]
    rhs = np.concatenate([system.b_ub, system.b_eq])
    c = np.zeros(V + 1)
    c[-1] = 1.0
    lb = np.concatenate([np.zeros(V), [-MARGIN_BOUND]])
    ub = np.concatenate([np.ones(V), [MARGIN_BOUND]])
    ir = make_ir("max", c, rows, senses, rhs, lb, ub, name="slater-margin")
    res = solve_lp(ir, backend)
    if not res.ok:
        return None
    return float(res.value), PlaUtility(spec.grid, res.x[:V], spec.partition)


def hoffman_bound(
    u: PlaUtility,
    spec: AmbiguitySpec,
    u0: PlaUtility,
    alpha: float,
    system: LinearSystem | None = None,
) -> float:
    """Distance-to-polytope estimate d(u, u0)/alpha * ||positive residual||_2.

    The residual runs over the preference rows only; the structural rows
    define the ambient class that both utilities are assumed to satisfy.
    ``u0`` must carry slack at least ``alpha`` on every preference row
    (use :func:`slater_point`); the estimate is invalid otherwise.
    """
    if alpha <= 0:
        raise NonPositiveAlpha("the margin must be positive")
    system = assemble(spec) if system is None else system
    if system.n_pref == 0:
        return 0.0
    rows = system.A_ub[: system.n_pref]
    slack0 = system.b_ub[: system.n_pref] - rows @ u0.values
    if np.any(slack0 < alpha - 1e-9):
        raise ValueError("u0 does not have slack alpha on every preference row")
    resid = rows @ u.values - system.b_ub[: system.n_pref]
    resid = np.clip(resid, 0.0, None)
    return sup_distance(u, u0) / alpha * float(np.linalg.norm(resid))


@dataclass(frozen=True)
class ErrorBoundInputs:
    """Everything the mesh-size bound formulas consume.

    ``beta`` are the largest coordinate gaps per attribute, ``lipschitz``
    the class modulus, ``alpha_hat`` the margin (None when unavailable),
    ``psi_box_masses`` the |total psi-measure| of the box per preference
    row, ``simple_psi`` whether every row is exact at the grid (cell
    constants / on-grid lotteries), and ``ranges`` the attribute ranges.
    """

    beta: tuple[float, float]
    lipschitz: float
    alpha_hat: float | None
    psi_box_masses: tuple[float, ...] = ()
    simple_psi: bool = True
    ranges: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        if min(self.beta) < 0 or self.lipschitz < 0:
            raise ValueError("inputs must be nonnegative")


def error_bound_inputs(
    spec: AmbiguitySpec, lipschitz: float | None = None, alpha_hat: float | None = None
) -> ErrorBoundInputs:
    L = lipschitz if lipschitz is not None else spec.shape.lipschitz
    if L is None:
        raise ValueError("a Lipschitz modulus is required for the bounds")
    gaps = spec.grid.max_gaps()
    masses = tuple(abs(psi_box_mass(spec.grid, p)) for p in spec.prefs)
    return ErrorBoundInputs(
        beta=(gaps[0], gaps[1]),
        lipschitz=L,
        alpha_hat=alpha_hat,
        psi_box_masses=masses,
        simple_psi=all(is_simple(p) for p in spec.prefs),
        ranges=(spec.grid.ranges[0], spec.grid.ranges[1]),
    )


def _mass_norm(inputs: ErrorBoundInputs) -> float:
    return float(np.linalg.norm(np.asarray(inputs.psi_box_masses)))


def _alpha_term(inputs: ErrorBoundInputs) -> float:
    if inputs.simple_psi:
        return 0.0
    if inputs.alpha_hat is None or inputs.alpha_hat <= 0:
        raise NonPositiveAlpha("bounds with inexact psi need a positive margin")
    return _mass_norm(inputs) / inputs.alpha_hat


def hausdorff_bound(inputs: ErrorBoundInputs, metric: str = "kolmogorov") -> float:
    """Mesh-size cap on the Hausdorff distance between the continuous and
    the piecewise-linear ambiguity sets, under the chosen pseudo-metric."""
    b1, b2 = inputs.beta
    L = inputs.lipschitz
    if metric == "kantorovich":
        base = 2.0 * float(np.hypot(b1, b2))
        if inputs.simple_psi:
            return base
        rx, ry = inputs.ranges
        return base + L * (b1 + b2) * float(np.hypot(rx, ry)) * _alpha_term(inputs)
    if metric == "kolmogorov":
        if inputs.simple_psi:
            return 2.0 * L * (b1 + b2)
        return L * (b1 + b2) * (2.0 + _alpha_term(inputs))
    raise ValueError("metric must be 'kantorovich' or 'kolmogorov'")


def value_error_bound(inputs: ErrorBoundInputs) -> float:
    """Mesh-size cap on |optimal value - approximate optimal value|."""
    b1, b2 = inputs.beta
    L = inputs.lipschitz
    if inputs.simple_psi:
        return 3.0 * L * (b1 + b2)
    return L * (b1 + b2) * (3.0 + _alpha_term(inputs))


def kolmogorov_metric(u_fn, v_fn, bounds, samples: int = 60) -> float:
    """Measured box-mass distance between two utilities (sampled sup)."""
    (xlo, xhi), (ylo, yhi) = bounds
    xs = np.linspace(xlo, xhi, samples)
    ys = np.linspace(ylo, yhi, samples)
    worst = 0.0
    for x in xs:
        for y in ys:
            mu_u = u_fn(x, y) - u_fn(x, ylo) - u_fn(xlo, y) + u_fn(xlo, ylo)
            mu_v = v_fn(x, y) - v_fn(x, ylo) - v_fn(xlo, y) + v_fn(xlo, ylo)
            worst = max(worst, abs(mu_u - mu_v))
    return worst
