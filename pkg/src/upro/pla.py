"""Piecewise-linear utilities over a grid: evaluation and shape checks.

A utility is stored as one value per gridpoint (flattened, first axis
fastest) together with a partition choice.  Evaluation interpolates inside
the simplex containing the query point, so the function is continuous and
linear on every piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import grids
from .errors import DegenerateRescale, GridMismatch, NonFiniteValue
from .grids import GridProduct, locate_cells, locate_simplex

SHAPE_TOL = 1e-10


@dataclass(frozen=True)
class Partition:
    """Cell-splitting rule: ``type1``, ``type2``, or ``mixed``.

    ``mixed`` carries one boolean per cell (flattened first axis fastest,
    True = type1 on that cell) and exists only in 2-D.
    """

    kind: str
    type1_cells: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("type1", "type2", "mixed"):
            raise ValueError(f"unknown partition kind {self.kind!r}")
        if self.kind == "mixed":
            if self.type1_cells is None:
                raise ValueError("mixed partition needs per-cell flags")
            flags = np.asarray(self.type1_cells, dtype=bool)
            flags.setflags(write=False)
            object.__setattr__(self, "type1_cells", flags)

    def scheme_for_cell(self, grid: GridProduct, cell: Sequence[int]) -> str:
        if self.kind != "mixed":
            return self.kind
        flat = int(np.ravel_multi_index(tuple(cell), grid.cell_shape, order="F"))
        return "type1" if self.type1_cells[flat] else "type2"


TYPE1 = Partition("type1")
TYPE2 = Partition("type2")


def mixed_partition(flags: np.ndarray) -> Partition:
    return Partition("mixed", np.asarray(flags, dtype=bool).ravel(order="F"))


@dataclass(frozen=True)
class PlaUtility:
    """Node-value vector plus partition; the decision vector of the LPs."""

    grid: GridProduct
    values: np.ndarray
    partition: Partition = TYPE1

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.node_count,):
            raise ValueError("value vector length must match the grid")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("node values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        idx, w = coefficient_rows(self.grid, np.asarray(points, dtype=float), self.partition)
        return np.einsum("nk,nk->n", self.values[idx], w)

    def as_table(self) -> np.ndarray:
        """Values reshaped to the grid shape (first axis fastest)."""
        return self.values.reshape(self.grid.shape, order="F")

    @property
    def is_normalized(self) -> bool:
        return (
            abs(self.values[0]) <= SHAPE_TOL
            and abs(self.values[-1] - 1.0) <= SHAPE_TOL
        )


@dataclass(frozen=True)
class ShapeSpec:
    """Structural assumptions defining the ambient utility class.

    ``curvature`` holds one of "convex" / "concave" / None per attribute;
    ``lipschitz`` is the l1-norm modulus (None = no Lipschitz rows).  With
    normalization the modulus cannot be below 1/(sum of attribute ranges)
    or the system is empty.
    """

    lipschitz: float | None = None
    monotone: bool = True
    conservative: bool = True
    curvature: tuple[str | None, ...] = ()
    normalized: bool = True

    def __post_init__(self) -> None:
        if self.lipschitz is not None and self.lipschitz <= 0:
            raise ValueError("lipschitz modulus must be positive")
        for c in self.curvature:
            if c not in (None, "convex", "concave"):
                raise ValueError(f"unknown curvature {c!r}")

    def curvature_for(self, axis: int) -> str | None:
        return self.curvature[axis] if axis < len(self.curvature) else None


def coefficient_rows(
    grid: GridProduct, points: np.ndarray, partition: Partition = TYPE1
) -> tuple[np.ndarray, np.ndarray]:
    """Vertex ids and barycentric weights for a batch of points.

    Returns ``(idx, w)`` of shape (n, m+1) each, such that the value of any
    utility ``u`` at point k is ``sum(w[k] * u.values[idx[k]])``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, m = pts.shape
    if m != grid.dims:
        raise ValueError("point dimension mismatch")
    cells = locate_cells(grid, pts)
    lo = np.stack([grid.coords[a][cells[:, a]] for a in range(m)], axis=1)
    width = np.stack(
        [grid.coords[a][cells[:, a] + 1] - grid.coords[a][cells[:, a]] for a in range(m)],
        axis=1,
    )
    t = np.clip((pts - lo) / width, 0.0, 1.0)
    strides = grid.strides()
    base = (cells * strides).sum(axis=1)

    if partition.kind == "mixed":
        if m != 2:
            raise ValueError("mixed partition exists only in 2-D")
        flat = np.ravel_multi_index(
            (cells[:, 0], cells[:, 1]), grid.cell_shape, order="F"
        )
        use1 = partition.type1_cells[flat]
        idx1, w1 = _rows_type1(t, base, strides, m)
        idx2, w2 = _rows_type2(t, base, strides)
        idx = np.where(use1[:, None], idx1, idx2)
        w = np.where(use1[:, None], w1, w2)
        return idx, w
    if partition.kind == "type2":
        if m != 2:
            raise ValueError("type2 partition exists only in 2-D")
        return _rows_type2(t, base, strides)
    return _rows_type1(t, base, strides, m)


def _rows_type1(
    t: np.ndarray, base: np.ndarray, strides: np.ndarray, m: int
) -> tuple[np.ndarray, np.ndarray]:
    n = t.shape[0]
    order = np.argsort(-t, axis=1, kind="stable")
    ts = np.take_along_axis(t, order, axis=1)
    w = np.empty((n, m + 1))
    w[:, 0] = 1.0 - ts[:, 0]
    if m > 1:
        w[:, 1:m] = ts[:, :-1] - ts[:, 1:]
    w[:, m] = ts[:, -1]
    idx = np.empty((n, m + 1), dtype=np.int64)
    idx[:, 0] = base
    idx[:, 1:] = base[:, None] + np.cumsum(strides[order], axis=1)
    np.clip(w, 0.0, None, out=w)
    w /= w.sum(axis=1, keepdims=True)
    return idx, w


def _rows_type2(
    t: np.ndarray, base: np.ndarray, strides: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n = t.shape[0]
    tx, ty = t[:, 0], t[:, 1]
    upper = (1.0 - ty) <= tx
    idx = np.empty((n, 3), dtype=np.int64)
    w = np.empty((n, 3))
    n_y = base + strides[1]
    n_x = base + strides[0]
    n_xy = base + strides[0] + strides[1]
    # upper piece: vertices (i,j+1), (i+1,j+1), (i+1,j)
    idx[upper, 0] = n_y[upper]
    idx[upper, 1] = n_xy[upper]
    idx[upper, 2] = n_x[upper]
    w[upper, 0] = 1.0 - tx[upper]
    w[upper, 1] = tx[upper] - (1.0 - ty[upper])
    w[upper, 2] = 1.0 - ty[upper]
    low = ~upper
    # lower piece: vertices (i,j+1), (i,j), (i+1,j)
    idx[low, 0] = n_y[low]
    idx[low, 1] = base[low]
    idx[low, 2] = n_x[low]
    w[low, 0] = ty[low]
    w[low, 1] = (1.0 - tx[low]) - ty[low]
    w[low, 2] = tx[low]
    np.clip(w, 0.0, None, out=w)
    w /= w.sum(axis=1, keepdims=True)
    return idx, w


def evaluate(u: PlaUtility, point: Sequence[float]) -> float:
    simplex, bary = locate_simplex(
        u.grid, point, u.partition.scheme_for_cell(u.grid, grids.locate_cell(u.grid, point))
    )
    return float(np.dot(bary.weights, u.values[list(simplex.vertex_node_ids)]))


def coefficient_vector(
    grid: GridProduct, point: Sequence[float], partition: Partition = TYPE1
) -> dict[int, float]:
    """Sparse interpolation weights of one point over all nodes.

    The inner product of this row with any node-value vector equals the
    utility value at the point; at most m+1 entries are nonzero.
    """
    idx, w = coefficient_rows(grid, np.asarray(point, dtype=float)[None, :], partition)
    out: dict[int, float] = {}
    for k, weight in zip(idx[0], w[0]):
        if weight != 0.0:
            out[int(k)] = out.get(int(k), 0.0) + float(weight)
    return out


class ShapeViolation(NamedTuple):
    family: str
    index: tuple[int, ...]
    amount: float


def check_shape(
    u: PlaUtility, spec: ShapeSpec, tol: float = SHAPE_TOL
) -> list[ShapeViolation]:
    """All finite-difference shape violations of ``u`` against ``spec``."""
    table = u.as_table()
    grid = u.grid
    out: list[ShapeViolation] = []

    def scan(diff: np.ndarray, family: str, offset: tuple[int, ...]) -> None:
        for idx in np.argwhere(diff > tol):
            out.append(
                ShapeViolation(family, tuple(int(i) for i in idx), float(diff[tuple(idx)]))
            )

    for a in range(grid.dims):
        d = np.diff(table, axis=a)
        gaps = np.diff(grid.coords[a]).reshape(
            [-1 if ax == a else 1 for ax in range(grid.dims)]
        )
        if spec.monotone:
            scan(-d, f"monotone[{a}]", ())
        if spec.lipschitz is not None:
            scan(d - spec.lipschitz * gaps, f"lipschitz[{a}]", ())
        curv = spec.curvature_for(a)
        if curv is not None and grid.shape[a] >= 3:
            slopes = d / gaps
            dd = np.diff(slopes, axis=a)
            scan(-dd if curv == "convex" else dd, f"curvature[{a}]", ())
    if spec.conservative:
        if grid.dims != 2:
            raise ValueError("conservative rows are a 2-D notion")
        t = table
        gap = t[:-1, :-1] + t[1:, 1:] - t[:-1, 1:] - t[1:, :-1]
        scan(gap, "conservative", ())
    if spec.normalized:
        if abs(u.values[0]) > tol:
            out.append(ShapeViolation("normalized", (0,), abs(float(u.values[0]))))
        if abs(u.values[-1] - 1.0) > tol:
            out.append(
                ShapeViolation(
                    "normalized", (u.grid.node_count - 1,), abs(float(u.values[-1] - 1.0))
                )
            )
    if np.any(u.values < -tol) or np.any(u.values > 1 + tol):
        worst = max(float(np.max(u.values - 1)), float(np.max(-u.values)))
        out.append(ShapeViolation("range", (), worst))
    return out


def interpolate_from_function(
    grid: GridProduct,
    oracle: Callable[..., float],
    normalize: bool = False,
    partition: Partition = TYPE1,
) -> PlaUtility:
    """Sample an oracle at the gridpoints, optionally rescaling to [0, 1]."""
    pts = grid.node_points()
    vals = np.array([float(oracle(*p)) for p in pts])
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("oracle produced a non-finite value")
    if normalize:
        lo, hi = vals[0], vals[-1]
        if abs(hi - lo) < 1e-15:
            raise DegenerateRescale("equal corner values")
        vals = (vals - lo) / (hi - lo)
    return PlaUtility(grid, vals, partition)


def sup_distance(u1: PlaUtility, u2: PlaUtility) -> float:
    """Sup-norm distance between two same-grid, same-partition utilities.

    For identical grids and partitions the difference is piecewise linear,
    so the supremum is attained at a gridpoint.
    """
    if u1.grid.shape != u2.grid.shape or any(
        not np.array_equal(a, b) for a, b in zip(u1.grid.coords, u2.grid.coords)
    ):
        raise GridMismatch("utilities live on different grids")
    if u1.partition.kind != u2.partition.kind:
        raise GridMismatch("utilities use different partitions")
    if u1.partition.kind == "mixed" and not np.array_equal(
        u1.partition.type1_cells, u2.partition.type1_cells
    ):
        raise GridMismatch("utilities use different mixed flags")
    return float(np.max(np.abs(u1.values - u2.values)))
