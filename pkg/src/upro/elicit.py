"""Adaptive pairwise-comparison elicitation.

Each question shows a certain outcome at a gridpoint against a risky
lottery on the two extreme corners.  The risky probability is the midpoint
of the currently admissible value interval at that gridpoint, computed by
a pair of bound LPs over everything answered so far, so each answer cuts
the interval in half.  A simulated decision maker answers from a known
utility; an interactive channel can answer instead.

Gridpoints are visited in a deterministic boustrophedon order: the first
attribute ascends, the remaining index block alternates direction, and the
two normalization corners are never asked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .ambiguity import AmbiguitySpec, LinearSystem, assemble
from .errors import Exhausted, InconsistentTranscript
from .grids import GridProduct
from .lsint import LotteryPair, PreferenceConstraint, certain, corner_lottery
from .pla import Partition, ShapeSpec, TYPE1
from .solver import solve_lp

#: Structural rows used during questioning: monotone, conservative,
#: normalized, first attribute convex, second concave (the shape of the
#: reference utilities); no Lipschitz cap while questioning.
ELICIT_SHAPE_2D = ShapeSpec(
    lipschitz=None,
    monotone=True,
    conservative=True,
    curvature=("convex", "concave"),
    normalized=True,
)


@dataclass(frozen=True)
class Question:
    point: tuple[float, ...]
    index: tuple[int, ...]
    p: float
    interval: tuple[float, float]


@dataclass(frozen=True)
class Answer:
    sign: int  # +1 certain preferred, -1 risky preferred

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")


def question_order(shape: Sequence[int]) -> list[tuple[int, ...]]:
    """Boustrophedon node order, normalization corners excluded."""
    n0 = shape[0]
    rest = list(product(*[range(n) for n in shape[1:]]))
    low = tuple([0] * len(shape))
    high = tuple(n - 1 for n in shape)
    out: list[tuple[int, ...]] = []
    for i in range(n0):
        block = list(reversed(rest)) if i % 2 == 0 else rest
        for tail in block:
            idx = (i, *tail)
            if idx in (low, high):
                continue
            out.append(idx)
    return out


class ElicitationSession:
    """Single-writer question/answer state machine over one grid."""

    def __init__(
        self,
        grid: GridProduct,
        shape: ShapeSpec | None = None,
        partition: Partition = TYPE1,
        backend: str | None = None,
        order: Sequence[tuple[int, ...]] | None = None,
    ) -> None:
        self.grid = grid
        self.shape = shape if shape is not None else ELICIT_SHAPE_2D
        if grid.dims != 2 and shape is None:
            raise ValueError("provide an explicit shape for non-2-D sessions")
        self.partition = partition
        self.backend = backend
        self.order = list(order) if order is not None else question_order(grid.shape)
        self.cursor = 0
        self.transcript: list[tuple[Question, Answer]] = []
        self.pending: Question | None = None
        self._system: LinearSystem = assemble(
            AmbiguitySpec(grid, self.shape, (), partition)
        )

    # -- bound LPs ----------------------------------------------------------

    def _answer_rows(self) -> tuple[sp.csr_matrix, np.ndarray]:
        V = self.grid.node_count
        rows, rhs = [], []
        for q, a in self.transcript:
            nid = self.grid.node_id(q.index)
            r = np.zeros(V)
            r[nid] = -a.sign  # sign * (p - u_node) <= 0
            rows.append(r)
            rhs.append(-a.sign * q.p)
        if not rows:
            return sp.csr_matrix((0, V)), np.zeros(0)
        return sp.csr_matrix(np.stack(rows)), np.array(rhs)

    def value_interval(self, index: tuple[int, ...]) -> tuple[float, float]:
        """Admissible utility range at a gridpoint given all answers so far."""
        V = self.grid.node_count
        c = np.zeros(V)
        c[self.grid.node_id(index)] = 1.0
        extra = self._answer_rows()
        lo = solve_lp(self._system.to_ir(c, "min", extra_ub=extra), self.backend)
        hi = solve_lp(self._system.to_ir(c, "max", extra_ub=extra), self.backend)
        if not (lo.ok and hi.ok):
            raise InconsistentTranscript("the recorded answers admit no utility")
        return float(lo.value), float(hi.value)

    # -- the public state machine -------------------------------------------

    def next_question(self) -> Question:
        if self.pending is not None:
            return self.pending
        if self.cursor >= len(self.order):
            raise Exhausted("no unasked gridpoints remain")
        index = self.order[self.cursor]
        i1, i2 = self.value_interval(index)
        point = tuple(float(self.grid.coords[a][k]) for a, k in enumerate(index))
        self.pending = Question(point, index, (i1 + i2) / 2.0, (i1, i2))
        return self.pending

    def record_answer(self, answer: Answer | int) -> Question:
        if self.pending is None:
            raise ValueError("no pending question")
        ans = answer if isinstance(answer, Answer) else Answer(int(answer))
        q = self.pending
        self.transcript.append((q, ans))
        self.pending = None
        self.cursor += 1
        return q

    @property
    def done(self) -> bool:
        return self.pending is None and self.cursor >= len(self.order)

    # -- exports --------------------------------------------------------------

    def prefs(self) -> tuple[PreferenceConstraint, ...]:
        """The transcript as comparison rows consumable by the polytope."""
        out = []
        for q, a in self.transcript:
            risky = corner_lottery(self.grid, q.p)
            sure = certain(np.asarray(q.point))
            pair = LotteryPair(sure, risky) if a.sign > 0 else LotteryPair(risky, sure)
            out.append(PreferenceConstraint(pair, 0.0))
        return tuple(out)

    def spec(self, solve_shape: ShapeSpec | None = None) -> AmbiguitySpec:
        return AmbiguitySpec(
            self.grid, solve_shape or self.shape, self.prefs(), self.partition
        )

    def records(self) -> list[dict]:
        return [
            {
                "index": list(q.index),
                "point": list(q.point),
                "interval": [q.interval[0], q.interval[1]],
                "p": q.p,
                "sign": a.sign,
            }
            for q, a in self.transcript
        ]


def simulate_dm(oracle: Callable[..., float], question: Question) -> Answer:
    """Deterministic answer from a known utility; ties prefer the certain side."""
    return Answer(1 if float(oracle(*question.point)) >= question.p else -1)


def random_question_grid(
    m1: int,
    m2: int,
    seed: int | None,
    bounds: Sequence[tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0)),
) -> GridProduct:
    """Endpoints plus uniformly drawn interior coordinates, sorted."""
    rng = np.random.default_rng(seed)
    axes = []
    for count, (lo, hi) in zip((m1, m2), bounds):
        if count < 2:
            raise ValueError("need at least the two endpoints per attribute")
        interior = np.sort(rng.uniform(lo, hi, size=count - 2))
        axes.append(np.concatenate([[lo], interior, [hi]]))
    return GridProduct(tuple(axes))


@dataclass
class ElicitationRun:
    session: ElicitationSession
    records: list[dict] = field(default_factory=list)

    def spec(self, solve_shape: ShapeSpec | None = None) -> AmbiguitySpec:
        return self.session.spec(solve_shape)


def run_algorithm(
    m1: int,
    m2: int,
    oracle: Callable[..., float] | None = None,
    seed: int | None = None,
    grid: GridProduct | None = None,
    shape: ShapeSpec | None = None,
    answer_channel: Callable[[Question], Answer] | None = None,
    backend: str | None = None,
) -> ElicitationRun:
    """Full questioning pass: m1*m2 - 2 questions over a (possibly random)
    question grid, answered by the oracle or an interactive channel."""
    if oracle is None and answer_channel is None:
        raise ValueError("provide an oracle or an answer channel")
    if grid is None:
        grid = random_question_grid(m1, m2, seed)
    session = ElicitationSession(grid, shape, backend=backend)
    while not session.done:
        q = session.next_question()
        ans = simulate_dm(oracle, q) if oracle is not None else answer_channel(q)
        session.record_answer(ans)
    return ElicitationRun(session, session.records())
