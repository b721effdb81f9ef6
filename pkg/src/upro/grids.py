"""Rectangular grids over a box domain and their simplicial triangulations.

The domain is a box T = [lo_1, hi_1] x ... x [lo_m, hi_m] carrying a
tensor-product grid.  Cells follow a half-open convention along each axis:
the first interval [c_1, c_2] is closed and every later one (c_k, c_{k+1}]
is open on the left, so every point of T belongs to exactly one cell.

Node vectors are flattened with the first axis fastest (Fortran order), so
in 2-D the node vector reads (u_11, ..., u_N1_1, u_12, ..., u_N1_N2).

Partitions of a cell into simplices:

* 2-D ``type1`` splits along the main diagonal (lower-left to upper-right),
  ``type2`` along the counter diagonal.
* 3-D cells split into six tetrahedra, one per ordering of the cell-local
  coordinates; all six share the cell's main diagonal.
* m >= 4 uses the same order-simplex construction with m! pieces per cell
  (one per coordinate permutation).

The 2-D ``type1`` split is the m = 2 instance of the order-simplex
construction, so a single code path covers every dimension; ``type2`` is a
2-D-only alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterator, Sequence

import numpy as np

from .errors import DegenerateSimplex, OutOfDomain, OutsideSimplex, UnsupportedScheme

DOMAIN_TOL = 1e-12
WEIGHT_TOL = 1e-10

# Labels of the six 3-D simplices, keyed by the descending order of the
# cell-local coordinates.  "1*" pieces live in the half t_x >= t_y, "2*"
# pieces in t_y >= t_x; u/m/l orders them top to bottom in the last axis.
_LABELS_3D = {
    (0, 1, 2): "1l",
    (0, 2, 1): "1m",
    (2, 0, 1): "1u",
    (2, 1, 0): "2u",
    (1, 2, 0): "2m",
    (1, 0, 2): "2l",
}
_PERM_3D = {v: k for k, v in _LABELS_3D.items()}


@dataclass(frozen=True)
class GridProduct:
    """Per-attribute sorted coordinate vectors defining the domain box.

    Attributes:
        coords: one strictly increasing 1-D array per attribute, each with
            at least two entries; the first/last entries are the bounds.
    """

    coords: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        arrays = tuple(np.ascontiguousarray(c, dtype=float) for c in self.coords)
        if not arrays:
            raise ValueError("grid needs at least one attribute")
        for c in arrays:
            if c.ndim != 1 or c.size < 2:
                raise ValueError("each axis needs >= 2 coordinates")
            if not np.all(np.isfinite(c)):
                raise ValueError("coordinates must be finite")
            if not np.all(np.diff(c) > 0):
                raise ValueError("coordinates must be strictly increasing")
            c.setflags(write=False)
        object.__setattr__(self, "coords", arrays)

    @property
    def dims(self) -> int:
        return len(self.coords)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.coords)

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return tuple(c.size - 1 for c in self.coords)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.cell_shape))

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple((float(c[0]), float(c[-1])) for c in self.coords)

    @property
    def ranges(self) -> tuple[float, ...]:
        return tuple(float(c[-1] - c[0]) for c in self.coords)

    def max_gaps(self) -> tuple[float, ...]:
        """Largest coordinate gap per attribute (the mesh-size numbers)."""
        return tuple(float(np.max(np.diff(c))) for c in self.coords)

    def node_id(self, idx: Sequence[int]) -> int:
        """Flatten a multi-index (first axis fastest)."""
        return int(np.ravel_multi_index(tuple(idx), self.shape, order="F"))

    def node_index(self, node_id: int) -> tuple[int, ...]:
        return tuple(int(k) for k in np.unravel_index(node_id, self.shape, order="F"))

    def node_point(self, node_id: int) -> np.ndarray:
        idx = self.node_index(node_id)
        return np.array([self.coords[a][k] for a, k in enumerate(idx)])

    def node_points(self) -> np.ndarray:
        """All node coordinates as a (V, m) array in flattening order."""
        mesh = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([m.ravel(order="F") for m in mesh], axis=1)

    def strides(self) -> np.ndarray:
        """Flat-id increment when stepping one node along each axis."""
        out = np.ones(self.dims, dtype=np.int64)
        for a in range(1, self.dims):
            out[a] = out[a - 1] * self.shape[a - 1]
        return out

    def cells(self) -> Iterator[tuple[int, ...]]:
        for flat in range(self.cell_count):
            yield tuple(
                int(k) for k in np.unravel_index(flat, self.cell_shape, order="F")
            )

    def corner_low(self) -> np.ndarray:
        return np.array([c[0] for c in self.coords])

    def corner_high(self) -> np.ndarray:
        return np.array([c[-1] for c in self.coords])

    def contains(self, point: np.ndarray, tol: float = DOMAIN_TOL) -> bool:
        p = np.asarray(point, dtype=float)
        lo, hi = self.corner_low(), self.corner_high()
        return bool(np.all(p >= lo - tol) and np.all(p <= hi + tol))

    def find_node(self, point: Sequence[float], tol: float = 1e-9) -> int | None:
        """Flat id of the gridpoint equal to ``point``, or None."""
        idx = []
        for a, x in enumerate(point):
            hits = np.nonzero(np.abs(self.coords[a] - x) <= tol)[0]
            if hits.size == 0:
                return None
            idx.append(int(hits[0]))
        return self.node_id(idx)


def grid_from_lists(*axes: Sequence[float]) -> GridProduct:
    return GridProduct(tuple(np.asarray(a, dtype=float) for a in axes))


def unit_grid(shape: Sequence[int]) -> GridProduct:
    """Uniform grid on the unit box with the given node counts."""
    return GridProduct(tuple(np.linspace(0.0, 1.0, n) for n in shape))


@dataclass(frozen=True)
class Simplex:
    """A full-dimensional simplex of the triangulation.

    ``vertex_node_ids`` index the grid's flattened node ordering; ``label``
    tags the piece within its cell ("1l"/"1u", "2l"/"2u", the six 3-D tags,
    or "p<digits>" for higher dimensions).
    """

    vertex_node_ids: tuple[int, ...]
    label: str
    cell: tuple[int, ...]

    def vertex_points(self, grid: GridProduct) -> np.ndarray:
        return np.stack([grid.node_point(v) for v in self.vertex_node_ids])


@dataclass(frozen=True)
class BarycentricCoords:
    weights: np.ndarray = field()

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("barycentric weights must sum to 1")
        object.__setattr__(self, "weights", w)


def locate_cell(
    grid: GridProduct, point: Sequence[float], tol: float = DOMAIN_TOL
) -> tuple[int, ...]:
    """Cell containing ``point`` under the half-open convention.

    Boundary behaviour is deterministic: a coordinate equal to an interior
    gridpoint belongs to the lower cell, the upper domain endpoint to the
    last cell, and everything in the first interval (both ends included)
    to cell 0.
    """
    p = np.asarray(point, dtype=float)
    if p.shape != (grid.dims,):
        raise ValueError(f"expected a {grid.dims}-vector")
    idx = []
    for a, c in enumerate(grid.coords):
        x = p[a]
        if x < c[0] - tol or x > c[-1] + tol:
            raise OutOfDomain(f"coordinate {x!r} outside [{c[0]}, {c[-1]}] on axis {a}")
        x = min(max(x, c[0]), c[-1])
        k = int(np.searchsorted(c, x, side="left")) - 1
        idx.append(min(max(k, 0), c.size - 2))
    return tuple(idx)


def locate_cells(grid: GridProduct, points: np.ndarray, tol: float = DOMAIN_TOL) -> np.ndarray:
    """Vectorized :func:`locate_cell` for an (n, m) array of points."""
    pts = np.asarray(points, dtype=float)
    out = np.empty(pts.shape, dtype=np.int64)
    for a, c in enumerate(grid.coords):
        x = pts[:, a]
        if np.any(x < c[0] - tol) or np.any(x > c[-1] + tol):
            raise OutOfDomain(f"points outside bounds on axis {a}")
        x = np.clip(x, c[0], c[-1])
        k = np.searchsorted(c, x, side="left") - 1
        out[:, a] = np.clip(k, 0, c.size - 2)
    return out


def _cell_base_and_widths(
    grid: GridProduct, cell: Sequence[int]
) -> tuple[np.ndarray, np.ndarray, int]:
    lo = np.array([grid.coords[a][k] for a, k in enumerate(cell)])
    width = np.array([grid.coords[a][k + 1] - grid.coords[a][k] for a, k in enumerate(cell)])
    base = grid.node_id(tuple(cell))
    return lo, width, base


def _order_simplex(
    grid: GridProduct, cell: tuple[int, ...], perm: tuple[int, ...], label: str
) -> Simplex:
    strides = grid.strides()
    ids = [grid.node_id(cell)]
    for a in perm:
        ids.append(ids[-1] + int(strides[a]))
    return Simplex(tuple(ids), label, cell)


def _perm_label(dims: int, perm: tuple[int, ...]) -> str:
    if dims == 2:
        return "1l" if perm == (0, 1) else "1u"
    if dims == 3:
        return _LABELS_3D[perm]
    return "p" + "".join(str(a) for a in perm)


def triangulate_cell(
    grid: GridProduct, cell: Sequence[int], scheme: str = "type1"
) -> list[Simplex]:
    """Decompose one cell into simplices.

    ``type1`` covers every dimension (2 triangles in 2-D, 6 tetrahedra in
    3-D, m! order simplices beyond); ``type2`` is the 2-D counter-diagonal
    split.
    """
    cell = tuple(int(k) for k in cell)
    for a, k in enumerate(cell):
        if not 0 <= k < grid.shape[a] - 1:
            raise ValueError(f"cell index {cell} out of range")
    m = grid.dims
    if scheme == "type2":
        if m != 2:
            raise UnsupportedScheme("type2 partition exists only in 2-D")
        strides = grid.strides()
        base = grid.node_id(cell)
        n_x, n_y, n_xy = base + int(strides[0]), base + int(strides[1]), base + int(
            strides[0] + strides[1]
        )
        return [
            Simplex((n_y, n_xy, n_x), "2u", cell),
            Simplex((n_y, base, n_x), "2l", cell),
        ]
    if scheme != "type1":
        raise UnsupportedScheme(f"unknown scheme {scheme!r}")
    return [
        _order_simplex(grid, cell, perm, _perm_label(m, perm))
        for perm in permutations(range(m))
    ]


def simplex_for_label(grid: GridProduct, cell: Sequence[int], label: str) -> Simplex:
    """Rebuild one simplex of a cell from its partition label."""
    cell = tuple(int(k) for k in cell)
    if label in ("2u", "2l"):
        for s in triangulate_cell(grid, cell, "type2"):
            if s.label == label:
                return s
    if grid.dims == 2 and label in ("1l", "1u"):
        perm = (0, 1) if label == "1l" else (1, 0)
        return _order_simplex(grid, cell, perm, label)
    if grid.dims == 3 and label in _PERM_3D:
        return _order_simplex(grid, cell, _PERM_3D[label], label)
    if label.startswith("p"):
        perm = tuple(int(ch) for ch in label[1:])
        return _order_simplex(grid, cell, perm, label)
    raise UnsupportedScheme(f"unknown label {label!r} in {grid.dims}-D")


def locate_simplex(
    grid: GridProduct, point: Sequence[float], scheme: str = "type1"
) -> tuple[Simplex, BarycentricCoords]:
    """Containing simplex and barycentric weights of ``point``.

    Points on a dividing diagonal/facet are assigned deterministically:
    under ``type1`` ties sort lower axes first (in 2-D that is the lower
    triangle), under ``type2`` the counter-diagonal itself belongs to the
    upper piece.
    """
    p = np.asarray(point, dtype=float)
    cell = locate_cell(grid, p)
    lo, width, _ = _cell_base_and_widths(grid, cell)
    t = np.clip((p - lo) / width, 0.0, 1.0)
    m = grid.dims

    if scheme == "type2":
        if m != 2:
            raise UnsupportedScheme("type2 partition exists only in 2-D")
        tx, ty = float(t[0]), float(t[1])
        upper = (1.0 - ty) <= tx  # counter diagonal itself goes to the upper piece
        if upper:
            label = "2u"
            w = np.array([1.0 - tx, tx - (1.0 - ty), 1.0 - ty])
        else:
            label = "2l"
            w = np.array([ty, (1.0 - tx) - ty, tx])
        simplex = simplex_for_label(grid, cell, label)
    elif scheme == "type1":
        order = tuple(int(a) for a in np.argsort(-t, kind="stable"))
        ts = t[list(order)]
        w = np.empty(m + 1)
        w[0] = 1.0 - ts[0]
        w[1:m] = ts[:-1] - ts[1:]
        w[m] = ts[-1]
        simplex = _order_simplex(grid, cell, order, _perm_label(m, order))
    else:
        raise UnsupportedScheme(f"unknown scheme {scheme!r}")

    w[(w < 0) & (w > -DOMAIN_TOL)] = 0.0
    w = w / w.sum()
    return simplex, BarycentricCoords(w)


def barycentric_coords(vertex_points: np.ndarray, point: Sequence[float]) -> BarycentricCoords:
    """Solve the affine system for the weights of ``point`` in a simplex.

    Raises ``DegenerateSimplex`` when the vertices are affinely dependent
    and ``OutsideSimplex`` when a weight is negative beyond tolerance.
    """
    verts = np.asarray(vertex_points, dtype=float)
    p = np.asarray(point, dtype=float)
    n, m = verts.shape
    if n != m + 1:
        raise ValueError("need m+1 vertices for an m-simplex")
    a = np.vstack([verts.T, np.ones(n)])
    b = np.append(p, 1.0)
    try:
        w = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplex(str(exc)) from None
    if np.any(w < -WEIGHT_TOL):
        raise OutsideSimplex(f"negative weight {w.min():.3e}")
    w[(w < 0) & (w >= -DOMAIN_TOL)] = 0.0
    w = np.clip(w, 0.0, None)
    return BarycentricCoords(w / w.sum())


def simplex_volume(grid: GridProduct, simplex: Simplex) -> float:
    verts = simplex.vertex_points(grid)
    edges = verts[1:] - verts[0]
    return abs(float(np.linalg.det(edges))) / math.factorial(grid.dims)
