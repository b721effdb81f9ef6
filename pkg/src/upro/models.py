"""Maximin expected-utility models over the ambiguity polytope.

Two interchangeable inner formulations compute the worst-case expected
utility at a fixed allocation z:

* the explicit path interpolates every reward image directly, so the inner
  problem is an LP whose objective coefficients depend on z;
* the implicit path introduces per-scenario convex-combination weights and
  simplex-selection binaries; the selection subproblem is a small MIP per
  scenario whose solution is unique, after which the value reduces to the
  same LP;
* the mixed-split variant additionally lets the adversary choose each
  cell's diagonal (one binary per cell), an exact big-M dispatch MIP.

On top of these sit the outer derivative-free search, a single
mixed-integer reformulation of the whole maximin problem (obtained by
dualizing the inner LP, exact for rewards linear in z), the constrained
variants (worst case shared between objective and constraint, or taken
separately), inconsistency-tolerant variants, and the perturbation / SAA
study helpers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .ambiguity import AmbiguitySpec, LinearSystem, assemble
from .dfree import DfreeConfig, OuterResult, outer_solve
from .errors import (
    CurvatureUnsupported,
    InfeasibleAmbiguity,
    InfeasibleAtZ,
    NonlinearReward,
    RewardOutOfDomain,
    ShiftOutOfDomain,
)
from .grids import GridProduct, Simplex, locate_simplex, triangulate_cell
from .lsint import LotteryPair, PreferenceConstraint, certain
from .pla import Partition, PlaUtility, coefficient_rows, mixed_partition
from .solver import EQUAL, LESS, SolveResult, make_ir, solve_lp, solve_mip

IMAGE_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioSet:
    """Discrete exogenous scenarios with probabilities."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pr = np.asarray(self.probs, dtype=float)
        if pts.shape[0] != pr.shape[0] or pts.shape[0] < 1:
            raise ValueError("need K >= 1 scenarios with one probability each")
        if np.any(pr < -1e-12) or abs(float(pr.sum()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to one")
        pts.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def take(self, k: int) -> "ScenarioSet":
        pts = self.points[:k]
        return ScenarioSet(pts, np.full(k, 1.0 / k))


@dataclass(frozen=True)
class LinearGroups:
    """Attribute a = sum over its index group of z_i * xi_i (linear in z)."""

    groups: tuple[tuple[int, ...], ...]
    n_decision: int

    def images(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.stack(
            [xi[:, list(g)] @ z[list(g)] for g in self.groups], axis=1
        )


@dataclass(frozen=True)
class GeneralReward:
    """Arbitrary reward map (z, xi) -> attribute vector."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n_decision: int

    def images(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.stack([np.asarray(self.fn(z, row), dtype=float) for row in xi])


Reward = LinearGroups | GeneralReward


@dataclass(frozen=True)
class InconsistencyConfig:
    """How to absorb contradictory answers: total slack or counted mistakes."""

    mode: str = "none"
    gamma: float = 0.0
    epsilon: float = 0.0
    big_m: float = 2.0

    def __post_init__(self) -> None:
        if self.mode not in ("none", "budget", "mistakes"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.gamma < 0 or not 0 <= self.epsilon <= 1 or self.big_m < 2:
            raise ValueError("gamma >= 0, epsilon in [0,1], big_m >= 2 required")


@dataclass
class InnerResult:
    value: float
    u_worst: PlaUtility
    result: SolveResult


def _checked_images(grid: GridProduct, images: np.ndarray) -> np.ndarray:
    lo, hi = grid.corner_low(), grid.corner_high()
    if np.any(images < lo - IMAGE_TOL) or np.any(images > hi + IMAGE_TOL):
        raise RewardOutOfDomain("a reward image falls outside the utility domain")
    return np.clip(images, lo, hi)


class EplaInner:
    """Reusable explicit inner minimization: the rows are assembled once,
    only the objective changes with z."""

    def __init__(
        self,
        spec: AmbiguitySpec,
        scenarios: ScenarioSet,
        rewards: Reward,
        backend: str | None = None,
        system: LinearSystem | None = None,
    ) -> None:
        self.spec = spec
        self.scenarios = scenarios
        self.rewards = rewards
        self.backend = backend
        self.system = assemble(spec) if system is None else system

    def objective_vector(self, z: np.ndarray) -> np.ndarray:
        return self._reward_row(z, self.rewards)

    def _reward_row(self, z: np.ndarray, rewards: Reward) -> np.ndarray:
        """Dense row with row.u = expected utility of the reward images."""
        images = _checked_images(self.spec.grid, rewards.images(z, self.scenarios.points))
        idx, w = coefficient_rows(self.spec.grid, images, self.spec.partition)
        row = np.zeros(self.spec.grid.node_count)
        np.add.at(row, idx, w * self.scenarios.probs[:, None])
        return row

    def solve(self, z: np.ndarray) -> InnerResult:
        ir = self.system.to_ir(self.objective_vector(z), "min", name="inner-epla")
        res = solve_lp(ir, self.backend)
        if not res.ok:
            raise InfeasibleAmbiguity(f"inner LP status {res.status}")
        return InnerResult(res.value, PlaUtility(self.spec.grid, res.x, self.spec.partition), res)

    def solve_constrained(self, z: np.ndarray, g: Reward, level: float) -> InnerResult:
        row = self._reward_row(z, g)
        extra = (sp.csr_matrix(-row[None, :]), np.array([-level]))
        ir = self.system.to_ir(
            self.objective_vector(z), "min", extra_ub=extra, name="inner-epla-constrained"
        )
        res = solve_lp(ir, self.backend)
        if not res.ok:
            if self._base_feasible():
                raise InfeasibleAtZ("expected-utility constraint cuts off the polytope")
            raise InfeasibleAmbiguity(f"inner LP status {res.status}")
        return InnerResult(res.value, PlaUtility(self.spec.grid, res.x, self.spec.partition), res)

    def constraint_floor(self, z: np.ndarray, g: Reward) -> float:
        """min over the polytope of the expected utility of g's images."""
        row = self._reward_row(z, g)
        ir = self.system.to_ir(row, "min", name="constraint-floor")
        res = solve_lp(ir, self.backend)
        if not res.ok:
            raise InfeasibleAmbiguity(f"inner LP status {res.status}")
        return res.value

    def _base_feasible(self) -> bool:
        if not hasattr(self, "_feas"):
            ir = self.system.to_ir(np.zeros(self.system.n), "min", name="feas")
            self._feas = solve_lp(ir, self.backend).ok
        return self._feas

    def solve_inconsistent(self, z: np.ndarray, cfg: InconsistencyConfig) -> InnerResult:
        if cfg.mode == "none":
            return self.solve(z)
        sys_ = self.system
        V, M = sys_.n, sys_.n_pref
        m_ub = sys_.A_ub.shape[0]
        c_u = self.objective_vector(z)
        if cfg.mode == "budget":
            # u-rows with a slack on each preference row, total slack capped.
            slack_cols = sp.csr_matrix(
                (
                    [-1.0] * M,
                    (list(range(M)), list(range(M))),
                ),
                shape=(m_ub, M),
            )
            A = sp.hstack([sys_.A_ub, slack_cols])
            budget_row = sp.hstack(
                [sp.csr_matrix((1, V)), sp.csr_matrix(np.ones((1, M)))]
            )
            rows = sp.vstack(
                [A, budget_row, sp.hstack([sys_.A_eq, sp.csr_matrix((sys_.A_eq.shape[0], M))])]
            ).tocsr()
            senses = [LESS] * (m_ub + 1) + [EQUAL] * sys_.A_eq.shape[0]
            rhs = np.concatenate([sys_.b_ub, [cfg.gamma], sys_.b_eq])
            c = np.concatenate([c_u, np.zeros(M)])
            lb = np.zeros(V + M)
            ub = np.concatenate([np.ones(V), np.full(M, np.inf)])
            ir = make_ir("min", c, rows, senses, rhs, lb, ub, name="inner-budget")
            res = solve_lp(ir, self.backend)
        else:
            # Binary per answer; flipping it swaps which direction binds.
            mhat = cfg.big_m
            pref = sys_.A_ub[:M]
            rest = sys_.A_ub[M:]
            delta_fwd = sp.csr_matrix(
                ([-mhat] * M, (list(range(M)), list(range(M)))), shape=(M, M)
            )
            delta_rev = sp.csr_matrix(
                ([mhat] * M, (list(range(M)), list(range(M)))), shape=(M, M)
            )
            rows = sp.vstack(
                [
                    sp.hstack([pref, delta_fwd]),
                    sp.hstack([-pref, delta_rev]),
                    sp.hstack([rest, sp.csr_matrix((rest.shape[0], M))]),
                    sp.hstack(
                        [sp.csr_matrix((1, V)), sp.csr_matrix(np.ones((1, M)))]
                    ),
                    sp.hstack([sys_.A_eq, sp.csr_matrix((sys_.A_eq.shape[0], M))]),
                ]
            ).tocsr()
            senses = (
                [LESS] * (2 * M + rest.shape[0] + 1) + [EQUAL] * sys_.A_eq.shape[0]
            )
            rhs = np.concatenate(
                [
                    sys_.b_ub[:M],
                    mhat - sys_.b_ub[:M],
                    sys_.b_ub[M:],
                    [cfg.epsilon * M],
                    sys_.b_eq,
                ]
            )
            c = np.concatenate([c_u, np.zeros(M)])
            integ = np.concatenate([np.zeros(V, dtype=bool), np.ones(M, dtype=bool)])
            ir = make_ir(
                "min", c, rows, senses, rhs, 0.0, 1.0, integrality=integ, name="inner-mistakes"
            )
            res = solve_mip(ir, self.backend)
        if not res.ok:
            raise InfeasibleAmbiguity(f"inner status {res.status}")
        return InnerResult(
            res.value, PlaUtility(self.spec.grid, res.x[:V], self.spec.partition), res
        )


def inner_epla(
    z: np.ndarray,
    scenarios: ScenarioSet,
    rewards: Reward,
    spec: AmbiguitySpec,
    backend: str | None = None,
) -> InnerResult:
    return EplaInner(spec, scenarios, rewards, backend).solve(np.asarray(z, dtype=float))


MIXED_CELL_CAP = 81  # 10x10 grids; one binary per cell makes this a MIP


def inner_mixed(
    z: np.ndarray,
    scenarios: ScenarioSet,
    rewards: Reward,
    spec: AmbiguitySpec,
    backend: str | None = None,
    system: LinearSystem | None = None,
    cell_cap: int = MIXED_CELL_CAP,
) -> InnerResult:
    """Worst case when the adversary also picks each cell's diagonal.

    One binary per cell selects the main- or counter-diagonal split there;
    a per-scenario value variable carries the active interpolation through
    an exact big-M dispatch (both interpolations live in [0, 1], so M = 1
    suffices).  Preference rows must be in node form, which is fine: they
    see only corner differences, so they are split-independent.  The value
    is never above the fixed type1/type2 inner values.
    """
    from .grids import locate_cells
    from .lsint import GeneralPsi

    grid = spec.grid
    if grid.dims != 2:
        raise ValueError("the mixed split is a 2-D construction")
    if any(isinstance(p.form, GeneralPsi) for p in spec.prefs):
        raise ValueError("mixed splits need node-form preference rows")
    n_cells = grid.cell_count
    if n_cells > cell_cap:
        raise ValueError(
            f"{n_cells} cells exceed the mixed-split cap ({cell_cap}); "
            "raise cell_cap explicitly for long runs"
        )
    sys_ = assemble(spec) if system is None else system
    V, K = grid.node_count, scenarios.size
    zv = np.asarray(z, dtype=float)
    images = _checked_images(grid, rewards.images(zv, scenarios.points))
    idx1, w1 = coefficient_rows(grid, images, Partition("type1"))
    idx2, w2 = coefficient_rows(grid, images, Partition("type2"))
    cells = locate_cells(grid, images)
    cell_flat = cells[:, 0] + (grid.shape[0] - 1) * cells[:, 1]

    # layout: u (V) | h (one binary per cell, 1 = main diagonal) | v (K)
    off_h, off_v = V, V + n_cells
    n_vars = off_v + K
    rows_i: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    senses: list[str] = []
    rhs: list[float] = []

    def put(r: int, j: int, val: float) -> None:
        rows_i.append(r)
        cols.append(j)
        data.append(val)

    ub_coo = sys_.A_ub.tocoo()
    for r, j, val in zip(ub_coo.row, ub_coo.col, ub_coo.data):
        put(int(r), int(j), float(val))
    senses.extend([LESS] * sys_.A_ub.shape[0])
    rhs.extend(float(b) for b in sys_.b_ub)

    for k in range(K):
        c = int(cell_flat[k])
        # v_k >= type1 interpolation - (1 - h_c)
        r = len(rhs)
        put(r, off_v + k, -1.0)
        for j, w in zip(idx1[k], w1[k]):
            put(r, int(j), float(w))
        put(r, off_h + c, 1.0)
        senses.append(LESS)
        rhs.append(1.0)
        # v_k >= type2 interpolation - h_c
        r = len(rhs)
        put(r, off_v + k, -1.0)
        for j, w in zip(idx2[k], w2[k]):
            put(r, int(j), float(w))
        put(r, off_h + c, -1.0)
        senses.append(LESS)
        rhs.append(0.0)

    eq_start = len(rhs)
    eq_coo = sys_.A_eq.tocoo()
    for r, j, val in zip(eq_coo.row, eq_coo.col, eq_coo.data):
        put(eq_start + int(r), int(j), float(val))
    senses.extend([EQUAL] * sys_.A_eq.shape[0])
    rhs.extend(float(b) for b in sys_.b_eq)

    c_obj = np.zeros(n_vars)
    c_obj[off_v:] = scenarios.probs
    integ = np.zeros(n_vars, dtype=bool)
    integ[off_h:off_v] = True
    A = sp.csr_matrix((data, (rows_i, cols)), shape=(len(rhs), n_vars))
    ir = make_ir(
        "min", c_obj, A, senses, np.array(rhs), 0.0, 1.0, integrality=integ, name="inner-mixed"
    )
    res = solve_mip(ir, backend)
    if not res.ok:
        raise InfeasibleAmbiguity(f"inner mixed MIP status {res.status}")
    flags = res.x[off_h:off_v] > 0.5
    u = PlaUtility(grid, res.x[:V], mixed_partition(flags))
    return InnerResult(res.value, u, res)


def maximin_mixed(
    spec: AmbiguitySpec,
    scenarios: ScenarioSet,
    rewards: Reward,
    config: DfreeConfig | None = None,
    backend: str | None = None,
) -> MaximinResult:
    system = assemble(spec)
    out = outer_solve(
        lambda z: inner_mixed(z, scenarios, rewards, spec, backend, system).value,
        rewards.n_decision,
        config,
    )
    final = inner_mixed(out.z, scenarios, rewards, spec, backend, system)
    return MaximinResult(final.value, out.z, final.u_worst, out)


def inner_epla_constrained(
    z: np.ndarray,
    scenarios: ScenarioSet,
    rewards: Reward,
    spec: AmbiguitySpec,
    g: Reward,
    level: float,
    backend: str | None = None,
) -> InnerResult:
    return EplaInner(spec, scenarios, rewards, backend).solve_constrained(
        np.asarray(z, dtype=float), g, level
    )


def inner_inconsistent(
    z: np.ndarray,
    scenarios: ScenarioSet,
    rewards: Reward,
    spec: AmbiguitySpec,
    cfg: InconsistencyConfig,
    backend: str | None = None,
) -> InnerResult:
    return EplaInner(spec, scenarios, rewards, backend).solve_inconsistent(
        np.asarray(z, dtype=float), cfg
    )


# ---------------------------------------------------------------------------
# Implicit path: convex-combination weights + simplex-selection binaries
# ---------------------------------------------------------------------------


@dataclass
class SimplexCatalog:
    """All simplices of a triangulated grid plus node->simplex incidence."""

    grid: GridProduct
    scheme: str
    simplices: list[Simplex]
    incidence: list[list[int]]
    position: dict[tuple[tuple[int, ...], str], int]


def build_catalog(grid: GridProduct, scheme: str = "type1") -> SimplexCatalog:
    simplices: list[Simplex] = []
    position: dict[tuple[tuple[int, ...], str], int] = {}
    for cell in grid.cells():
        for s in triangulate_cell(grid, cell, scheme):
            position[(cell, s.label)] = len(simplices)
            simplices.append(s)
    incidence: list[list[int]] = [[] for _ in range(grid.node_count)]
    for si, s in enumerate(simplices):
        for v in s.vertex_node_ids:
            incidence[v].append(si)
    return SimplexCatalog(grid, scheme, simplices, incidence, position)


@dataclass
class IplaSelection:
    alpha: np.ndarray          # dense (V,) convex-combination weights
    simplex_index: int
    label: str


@dataclass
class IplaSystem:
    """Per-scenario selection blocks; each block is a small MIP whose
    feasible (alpha, h) pair is unique up to facet ties."""

    catalog: SimplexCatalog
    images: np.ndarray
    programs: list

    def solve(self, backend: str | None = None) -> list[IplaSelection]:
        out = []
        cat = self.catalog
        V = cat.grid.node_count
        for k, ir in enumerate(self.programs):
            res = solve_mip(ir, backend)
            if not res.ok:
                raise RewardOutOfDomain(f"selection MIP status {res.status}")
            alpha = res.x[:V]
            h = res.x[V:]
            si = int(np.argmax(h))
            out.append(IplaSelection(alpha, si, cat.simplices[si].label))
        return out


def ipla_system(
    z: np.ndarray,
    scenarios: ScenarioSet,
    rewards: Reward,
    grid: GridProduct,
    scheme: str = "type1",
    catalog: SimplexCatalog | None = None,
) -> IplaSystem:
    """Selection blocks locating every reward image inside the triangulation.

    The witness simplex from direct location is preferred in the MIP
    objective so facet ties resolve deterministically.
    """
    cat = catalog or build_catalog(grid, scheme)
    images = _checked_images(grid, rewards.images(np.asarray(z, dtype=float), scenarios.points))
    V, S = grid.node_count, len(cat.simplices)
    coords = grid.node_points()
    programs = []
    for k in range(scenarios.size):
        f = images[k]
        witness, _ = locate_simplex(grid, f, scheme)
        w_idx = cat.position[(witness.cell, witness.label)]
        rows_i: list[int] = []
        cols: list[int] = []
        data: list[float] = []
        senses: list[str] = []
        rhs: list[float] = []

        def add(entries: list[tuple[int, float]], sense: str, b: float) -> None:
            r = len(rhs)
            for j, v in entries:
                rows_i.append(r)
                cols.append(j)
                data.append(v)
            senses.append(sense)
            rhs.append(b)

        add([(v, 1.0) for v in range(V)], EQUAL, 1.0)
        for a in range(grid.dims):
            add([(v, float(coords[v, a])) for v in range(V)], EQUAL, float(f[a]))
        add([(V + s, 1.0) for s in range(S)], EQUAL, 1.0)
        for v in range(V):
            entries = [(v, 1.0)] + [(V + s, -1.0) for s in cat.incidence[v]]
            add(entries, LESS, 0.0)

        c = np.zeros(V + S)
        c[V + w_idx] = -1.0  # prefer the located witness on ties
        integ = np.concatenate([np.zeros(V, dtype=bool), np.ones(S, dtype=bool)])
        A = sp.csr_matrix((data, (rows_i, cols)), shape=(len(rhs), V + S))
        programs.append(
            make_ir("min", c, A, senses, np.array(rhs), 0.0, 1.0, integ, name=f"ipla-k{k}")
        )
    return IplaSystem(cat, images, programs)


def feasible_selections(
    grid: GridProduct, point: np.ndarray, scheme: str = "type1", tol: float = 1e-9
) -> list[IplaSelection]:
    """Every simplex of the catalog containing the point (facet ties give
    several, all with identical interpolated values)."""
    from .grids import barycentric_coords
    from .errors import OutsideSimplex

    cat = build_catalog(grid, scheme)
    out = []
    for si, s in enumerate(cat.simplices):
        try:
            bc = barycentric_coords(s.vertex_points(grid), point)
        except OutsideSimplex:
            continue
        alpha = np.zeros(grid.node_count)
        for v, w in zip(s.vertex_node_ids, bc.weights):
            alpha[v] += w
        out.append(IplaSelection(alpha, si, s.label))
    return out


def inner_ipla(
    z: np.ndarray,
    scenarios: ScenarioSet,
    rewards: Reward,
    spec: AmbiguitySpec,
    backend: str | None = None,
    catalog: SimplexCatalog | None = None,
    system: LinearSystem | None = None,
) -> InnerResult:
    """Implicit-path inner value: per-scenario selection MIPs (whose
    solutions are unique), then the value LP over node values."""
    scheme = spec.partition.kind
    if scheme == "mixed":
        raise ValueError("the implicit path needs a fixed type1/type2 partition")
    blocks = ipla_system(z, scenarios, rewards, spec.grid, scheme, catalog)
    selections = blocks.solve(backend)
    c = np.zeros(spec.grid.node_count)
    for k, sel in enumerate(selections):
        c += scenarios.probs[k] * sel.alpha
    sys_ = assemble(spec) if system is None else system
    ir = sys_.to_ir(c, "min", name="inner-ipla")
    res = solve_lp(ir, backend)
    if not res.ok:
        raise InfeasibleAmbiguity(f"inner LP status {res.status}")
    return InnerResult(res.value, PlaUtility(spec.grid, res.x, spec.partition), res)


# ---------------------------------------------------------------------------
# Single mixed-integer reformulation (dualized inner LP)
# ---------------------------------------------------------------------------


@dataclass
class SingleMilpResult:
    value: float
    z: np.ndarray
    u_worst: PlaUtility
    inner_value: float
    result: SolveResult
    multipliers: dict[str, np.ndarray] | None = None


def single_milp(
    scenarios: ScenarioSet,
    rewards: Reward,
    spec: AmbiguitySpec,
    backend: str | None = None,
) -> SingleMilpResult:
    """The whole maximin problem as one MIP.

    The inner LP is dualized (multipliers for every row of the assembled
    system), its stationarity conditions become equalities coupling the
    multipliers to the convex-combination weights, and the selection
    binaries locate every reward image.  Exact when rewards are linear in
    z; curvature rows are rejected because the dual would need them sided.
    """
    if not isinstance(rewards, LinearGroups):
        raise NonlinearReward("the single MIP needs rewards linear in z")
    if any(c is not None for c in spec.shape.curvature):
        raise CurvatureUnsupported("drop curvature rows for the single MIP")
    if not (spec.shape.monotone and spec.shape.normalized):
        raise ValueError("monotonicity and normalization keep the inner LP bounded")
    scheme = spec.partition.kind
    if scheme == "mixed":
        raise ValueError("the single MIP needs a fixed type1/type2 partition")

    grid = spec.grid
    system = assemble(spec)
    cat = build_catalog(grid, scheme)
    n = rewards.n_decision
    V, S, K = grid.node_count, len(cat.simplices), scenarios.size
    m_ub, m_eq = system.A_ub.shape[0], system.A_eq.shape[0]

    off_z = 0
    off_alpha = n
    off_h = off_alpha + K * V
    off_y = off_h + K * S
    off_mu = off_y + m_ub
    n_vars = off_mu + m_eq

    rows_i: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    senses: list[str] = []
    rhs: list[float] = []

    def add(entries: Sequence[tuple[int, float]], sense: str, b: float) -> None:
        r = len(rhs)
        for j, v in entries:
            rows_i.append(r)
            cols.append(int(j))
            data.append(float(v))
        senses.append(sense)
        rhs.append(float(b))

    coords = grid.node_points()
    add([(off_z + i, 1.0) for i in range(n)], EQUAL, 1.0)
    for k in range(K):
        a0 = off_alpha + k * V
        h0 = off_h + k * S
        add([(a0 + v, 1.0) for v in range(V)], EQUAL, 1.0)
        for a, group in enumerate(rewards.groups):
            entries = [(a0 + v, float(coords[v, a])) for v in range(V)]
            entries += [(off_z + i, -float(scenarios.points[k, i])) for i in group]
            add(entries, EQUAL, 0.0)
        add([(h0 + s, 1.0) for s in range(S)], EQUAL, 1.0)
        for v in range(V):
            entries = [(a0 + v, 1.0)] + [(h0 + s, -1.0) for s in cat.incidence[v]]
            add(entries, LESS, 0.0)

    # Stationarity of the inner Lagrangian in every node value.
    ub_t = system.A_ub.T.tocsr()
    eq_t = system.A_eq.T.tocsr()
    for v in range(V):
        entries = [(off_alpha + k * V + v, float(scenarios.probs[k])) for k in range(K)]
        sl = slice(ub_t.indptr[v], ub_t.indptr[v + 1])
        entries += [
            (off_y + int(r), float(val)) for r, val in zip(ub_t.indices[sl], ub_t.data[sl])
        ]
        sl = slice(eq_t.indptr[v], eq_t.indptr[v + 1])
        entries += [
            (off_mu + int(r), float(val)) for r, val in zip(eq_t.indices[sl], eq_t.data[sl])
        ]
        add(entries, EQUAL, 0.0)

    c = np.zeros(n_vars)
    c[off_y : off_y + m_ub] = -system.b_ub
    c[off_mu : off_mu + m_eq] = -system.b_eq

    lb = np.zeros(n_vars)
    ub = np.ones(n_vars)
    lb[off_y : off_y + m_ub] = 0.0
    ub[off_y : off_y + m_ub] = np.inf
    lb[off_mu:] = -np.inf
    ub[off_mu:] = np.inf
    integ = np.zeros(n_vars, dtype=bool)
    integ[off_h : off_h + K * S] = True

    A = sp.csr_matrix((data, (rows_i, cols)), shape=(len(rhs), n_vars))
    ir = make_ir(
        "max", c, A, senses, np.array(rhs), lb, ub, integrality=integ, name="single-milp"
    )
    res = solve_mip(ir, backend)
    if not res.ok:
        raise InfeasibleAmbiguity(f"single MIP status {res.status}")
    z = np.clip(res.x[:n], 0.0, None)
    z = z / z.sum()
    inner = EplaInner(spec, scenarios, rewards, backend).solve(z)
    y = res.x[off_y : off_y + m_ub]
    grouped: dict[str, list[float]] = {}
    for (family, _), val in zip(system.labels_ub, y):
        grouped.setdefault(family, []).append(float(val))
    multipliers = {k: np.asarray(v) for k, v in grouped.items()}
    multipliers["normalization"] = res.x[off_mu : off_mu + m_eq]
    return SingleMilpResult(res.value, z, inner.u_worst, inner.value, res, multipliers)


# ---------------------------------------------------------------------------
# Outer search drivers
# ---------------------------------------------------------------------------


@dataclass
class MaximinResult:
    value: float
    z: np.ndarray
    u_worst: PlaUtility
    outer: OuterResult


def maximin_epla(
    spec: AmbiguitySpec,
    scenarios: ScenarioSet,
    rewards: Reward,
    config: DfreeConfig | None = None,
    backend: str | None = None,
) -> MaximinResult:
    engine = EplaInner(spec, scenarios, rewards, backend)
    out = outer_solve(lambda z: engine.solve(z).value, rewards.n_decision, config)
    final = engine.solve(out.z)
    return MaximinResult(final.value, out.z, final.u_worst, out)


def maximin_ipla(
    spec: AmbiguitySpec,
    scenarios: ScenarioSet,
    rewards: Reward,
    config: DfreeConfig | None = None,
    backend: str | None = None,
) -> MaximinResult:
    catalog = build_catalog(spec.grid, spec.partition.kind)
    system = assemble(spec)
    out = outer_solve(
        lambda z: inner_ipla(z, scenarios, rewards, spec, backend, catalog, system).value,
        rewards.n_decision,
        config,
    )
    final = inner_ipla(out.z, scenarios, rewards, spec, backend, catalog, system)
    return MaximinResult(final.value, out.z, final.u_worst, out)


def maximin_constrained(
    spec: AmbiguitySpec,
    scenarios: ScenarioSet,
    rewards: Reward,
    g: Reward,
    level: float,
    form: str = "joint",
    config: DfreeConfig | None = None,
    backend: str | None = None,
) -> MaximinResult:
    """Constrained robust forms: ``joint`` shares one worst case between
    objective and constraint; ``separate`` takes each worst case on its
    own (never larger)."""
    engine = EplaInner(spec, scenarios, rewards, backend)

    if form == "joint":

        def val(z: np.ndarray) -> float | None:
            try:
                return engine.solve_constrained(z, g, level).value
            except InfeasibleAtZ:
                return None

    elif form == "separate":

        def val(z: np.ndarray) -> float | None:
            if engine.constraint_floor(z, g) < level:
                return None
            return engine.solve(z).value

    else:
        raise ValueError("form must be 'joint' or 'separate'")

    out = outer_solve(val, rewards.n_decision, config)
    if out.value <= -1e8:
        raise InfeasibleAtZ("no feasible allocation found")
    if form == "joint":
        final = engine.solve_constrained(out.z, g, level)
    else:
        final = engine.solve(out.z)
    return MaximinResult(final.value, out.z, final.u_worst, out)


def strict_floor_member(
    spec: AmbiguitySpec,
    scenarios: ScenarioSet,
    rewards_g: Reward,
    level: float,
    z: np.ndarray,
    backend: str | None = None,
) -> bool:
    """Membership test of the separate-form feasible set at z."""
    dummy = EplaInner(spec, scenarios, rewards_g, backend)
    return dummy.constraint_floor(np.asarray(z, dtype=float), rewards_g) >= level - 1e-9


def maximin_true(
    scenarios: ScenarioSet,
    rewards: Reward,
    oracle: Callable[..., np.ndarray],
    config: DfreeConfig | None = None,
) -> OuterResult:
    """Best sample-average value of a known (vectorized) utility oracle."""

    def val(z: np.ndarray) -> float:
        images = rewards.images(z, scenarios.points)
        return float(np.dot(scenarios.probs, oracle(*(images[:, a] for a in range(images.shape[1])))))

    return outer_solve(val, rewards.n_decision, config)


# ---------------------------------------------------------------------------
# Perturbation and sample-average studies
# ---------------------------------------------------------------------------


def perturb_prefs(
    spec: AmbiguitySpec, delta1: float, delta2: float = 0.0
) -> AmbiguitySpec:
    """Shift the certain outcome of every elicited comparison inward.

    A component already sitting on the domain boundary is left alone (it
    could only move inward, so those comparisons stay as asked).  The grid
    gains the shifted coordinates so every outcome remains a gridpoint.
    """
    grid = spec.grid
    if grid.dims != 2:
        raise ValueError("perturbation applies to the bi-attribute setup")
    deltas = (delta1, delta2)
    (xlo, xhi), (ylo, yhi) = grid.bounds
    lows, highs = (xlo, ylo), (xhi, yhi)
    new_coords = [set(map(float, c)) for c in grid.coords]
    new_prefs: list[PreferenceConstraint] = []
    for pref in spec.prefs:
        form = pref.form
        if not isinstance(form, LotteryPair):
            new_prefs.append(pref)
            continue
        single, other, single_is_preferred = None, None, True
        if form.preferred.points.shape[0] == 1:
            single, other, single_is_preferred = form.preferred, form.other, True
        elif form.other.points.shape[0] == 1:
            single, other, single_is_preferred = form.other, form.preferred, False
        else:
            new_prefs.append(pref)
            continue
        pt = single.points[0].copy()
        for a in range(2):
            if abs(pt[a] - lows[a]) <= 1e-12 or abs(pt[a] - highs[a]) <= 1e-12:
                continue  # boundary outcomes are not perturbed
            pt[a] += deltas[a]
            if pt[a] < lows[a] - 1e-12 or pt[a] > highs[a] + 1e-12:
                raise ShiftOutOfDomain(f"shifted outcome {pt} leaves the domain")
            new_coords[a].add(float(pt[a]))
        shifted = certain(pt)
        pair = (
            LotteryPair(shifted, other)
            if single_is_preferred
            else LotteryPair(other, shifted)
        )
        new_prefs.append(PreferenceConstraint(pair, pref.rhs))
    new_grid = GridProduct(tuple(np.array(sorted(s)) for s in new_coords))
    return AmbiguitySpec(new_grid, spec.shape, tuple(new_prefs), spec.partition)


def saa_study(
    draw: Callable[[np.random.Generator, int], ScenarioSet],
    sizes: Sequence[int],
    repetitions: int,
    solve_fn: Callable[[ScenarioSet], float],
    seed: int = 0,
) -> dict[int, np.ndarray]:
    """Optimal-value distributions across resampled scenario sets."""
    seq = np.random.SeedSequence(seed)
    out: dict[int, np.ndarray] = {}
    for size in sizes:
        children = seq.spawn(repetitions)
        vals = []
        for rep in range(repetitions):
            rng = np.random.default_rng(children[rep])
            vals.append(float(solve_fn(draw(rng, size))))
        out[int(size)] = np.array(vals)
    return out
