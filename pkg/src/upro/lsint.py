"""Turning expected-utility comparisons into linear rows over node values.

A preference statement is an inequality  integral(u d psi) <= c  where the
integral is Lebesgue-Stieltjes with the measure induced by psi.  For the
three supported forms of psi the row over the node-value vector is:

* ``LotteryPair`` (psi = F_b - F_a, both discrete on gridpoints): the row
  is the node-probability difference, exact.
* ``SimplePsi`` (psi constant on every cell): the measure concentrates in
  point masses at the interior gridpoints, with mass equal to the 2-D
  corner difference of the four surrounding cell constants; the row is
  exact and independent of the partition.
* ``GeneralPsi`` (an arbitrary bounded evaluator): integration by parts
  moves the measure onto the utility; the cell terms reduce to 1-D
  integrals of the transformed integrand along each cell's dividing
  diagonal, evaluated by adaptive quadrature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import NonFiniteValue, OutcomeOffGrid, QuadratureFailure
from .grids import GridProduct
from .pla import Partition, TYPE1

QUAD_TOL = 1e-8


@dataclass(frozen=True)
class DiscreteLottery:
    """Finitely supported lottery over the attribute box."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pr = np.asarray(self.probs, dtype=float)
        if pts.shape[0] != pr.shape[0]:
            raise ValueError("one probability per outcome")
        if np.any(pr < -1e-12) or abs(pr.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be a distribution")
        pts.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)


def certain(point: Sequence[float]) -> DiscreteLottery:
    return DiscreteLottery(np.asarray(point, dtype=float)[None, :], np.array([1.0]))


def corner_lottery(grid: GridProduct, p_top: float) -> DiscreteLottery:
    """Two-outcome lottery on the grid's extreme corners (top w.p. ``p_top``)."""
    return DiscreteLottery(
        np.stack([grid.corner_low(), grid.corner_high()]),
        np.array([1.0 - p_top, p_top]),
    )


@dataclass(frozen=True)
class SimplePsi:
    """psi constant on every grid cell; ``cell_constants[i, j]`` = value on cell (i, j)."""

    cell_constants: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.cell_constants, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("cell constants must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "cell_constants", c)


@dataclass(frozen=True)
class LotteryPair:
    """Pairwise comparison: ``preferred`` was chosen over ``other``.

    The induced row encodes E[u(other)] - E[u(preferred)] <= rhs.
    """

    preferred: DiscreteLottery
    other: DiscreteLottery


@dataclass(frozen=True)
class GeneralPsi:
    """Arbitrary bounded evaluator, with optional known discontinuity lines."""

    fn: Callable[[float, float], float]
    x_breaks: tuple[float, ...] = ()
    y_breaks: tuple[float, ...] = ()


@dataclass(frozen=True)
class PreferenceConstraint:
    form: SimplePsi | LotteryPair | GeneralPsi
    rhs: float = 0.0


@dataclass(frozen=True)
class Row:
    """One sparse linear row over node values: ``coeffs . u <= rhs``."""

    indices: np.ndarray
    coeffs: np.ndarray
    rhs: float
    quad_error: float = 0.0

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        np.add.at(out, self.indices, self.coeffs)
        return out

    def dot(self, values: np.ndarray) -> float:
        return float(np.dot(self.coeffs, values[self.indices]))


@dataclass(frozen=True)
class TransformedPsi:
    """The three integrands produced by bivariate integration by parts."""

    psi_hat: Callable[[float, float], float]
    psi_1: Callable[[float], float]
    psi_2: Callable[[float], float]
    corner_mass: float = 0.0


def transform_by_parts(
    psi: GeneralPsi | Callable[[float, float], float],
    bounds: Sequence[tuple[float, float]],
) -> TransformedPsi:
    """Corner-difference transforms of psi on the box with given bounds."""
    fn = psi.fn if isinstance(psi, GeneralPsi) else psi
    (xlo, xhi), (ylo, yhi) = bounds
    top = fn(xhi, yhi)

    def psi_hat(x: float, y: float) -> float:
        return top - fn(x, yhi) - fn(xhi, y) + fn(x, y)

    def psi_1(x: float) -> float:
        return top - fn(x, yhi) - fn(xhi, ylo) + fn(x, ylo)

    def psi_2(y: float) -> float:
        return top - fn(xlo, yhi) - fn(xhi, y) + fn(xlo, y)

    corner = top - fn(xlo, yhi) - fn(xhi, ylo) + fn(xlo, ylo)
    for name, v in (("psi_hat", psi_hat(xlo, ylo)), ("corner", corner)):
        if not np.isfinite(v):
            raise NonFiniteValue(f"{name} evaluated non-finite")
    return TransformedPsi(psi_hat, psi_1, psi_2, corner)


def _integrate(fn: Callable[[float], float], a: float, b: float, breaks: Sequence[float]) -> tuple[float, float]:
    pts = sorted({p for p in breaks if a < p < b})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err = quad(fn, a, b, points=pts or None, epsabs=1e-12, epsrel=1e-10, limit=200)
    if not np.isfinite(val):
        raise QuadratureFailure("non-finite quadrature result")
    return float(val), float(err)


def node_probabilities(grid: GridProduct, lottery: DiscreteLottery, tol: float = 1e-9) -> np.ndarray:
    """Lottery outcomes mapped to the node vector; all must be gridpoints."""
    out = np.zeros(grid.node_count)
    for pt, pr in zip(lottery.points, lottery.probs):
        nid = grid.find_node(pt, tol)
        if nid is None:
            raise OutcomeOffGrid(f"outcome {tuple(pt)} is not a gridpoint")
        out[nid] += pr
    return out


def psi_box_mass(grid: GridProduct, pref: PreferenceConstraint) -> float:
    """Total signed psi-measure of the box, |.| of which enters the bounds."""
    form = pref.form
    if isinstance(form, LotteryPair):
        return 0.0
    if isinstance(form, SimplePsi):
        c = form.cell_constants
        return float(c[-1, -1] - c[0, -1] - c[-1, 0] + c[0, 0])
    (xlo, xhi), (ylo, yhi) = grid.bounds[:2]
    f = form.fn
    return float(f(xhi, yhi) - f(xlo, yhi) - f(xhi, ylo) + f(xlo, ylo))


def is_simple(pref: PreferenceConstraint) -> bool:
    return isinstance(pref.form, (SimplePsi, LotteryPair))


def constraint_row(
    grid: GridProduct, pref: PreferenceConstraint, partition: Partition = TYPE1
) -> Row:
    """Exact (or quadrature-backed) linear row of one preference statement."""
    form = pref.form
    if isinstance(form, LotteryPair):
        dense = node_probabilities(grid, form.other) - node_probabilities(
            grid, form.preferred
        )
        nz = np.nonzero(dense)[0]
        return Row(nz, dense[nz], pref.rhs)
    if isinstance(form, SimplePsi):
        return _simple_psi_row(grid, form, pref.rhs)
    if isinstance(form, GeneralPsi):
        return _general_psi_row(grid, form, pref.rhs, partition)
    raise TypeError(f"unknown preference form {type(form).__name__}")


def _simple_psi_row(grid: GridProduct, form: SimplePsi, rhs: float) -> Row:
    if grid.dims != 2:
        raise ValueError("cell-constant psi rows are a 2-D construction")
    c = form.cell_constants
    if c.shape != grid.cell_shape:
        raise ValueError("cell constants must match the cell layout")
    n1, n2 = grid.shape
    idx, coef = [], []
    # The measure is a sum of point masses at interior gridpoints: the
    # 2-D corner difference of the four surrounding cell constants.
    for i in range(1, n1 - 1):
        for j in range(1, n2 - 1):
            mass = c[i, j] - c[i - 1, j] - c[i, j - 1] + c[i - 1, j - 1]
            if mass != 0.0:
                idx.append(grid.node_id((i, j)))
                coef.append(mass)
    return Row(np.array(idx, dtype=np.int64), np.array(coef), rhs)


def _general_psi_row(
    grid: GridProduct, form: GeneralPsi, rhs: float, partition: Partition
) -> Row:
    if grid.dims != 2:
        raise ValueError("general psi rows are a 2-D construction")
    tp = transform_by_parts(form, grid.bounds)
    xs, ys = grid.coords
    n1, n2 = grid.shape
    dense = np.zeros(grid.node_count)
    err_total = 0.0

    dense[grid.node_id((0, 0))] += tp.corner_mass

    for i in range(n1 - 1):
        for j in range(n2 - 1):
            x0, x1 = xs[i], xs[i + 1]
            y0, y1 = ys[j], ys[j + 1]
            scheme = partition.scheme_for_cell(grid, (i, j))
            if scheme == "type1":
                diag = lambda x, _x0=x0, _x1=x1, _y0=y0, _y1=y1: _y0 + (x - _x0) * (
                    _y1 - _y0
                ) / (_x1 - _x0)
            else:
                diag = lambda x, _x0=x0, _x1=x1, _y0=y0, _y1=y1: _y1 - (x - _x0) * (
                    _y1 - _y0
                ) / (_x1 - _x0)
            val, err = _integrate(
                lambda x: tp.psi_hat(x, diag(x)), x0, x1, form.x_breaks
            )
            err_total += err
            coef = val / (x1 - x0)
            dense[grid.node_id((i, j))] += coef
            dense[grid.node_id((i + 1, j + 1))] += coef
            dense[grid.node_id((i, j + 1))] -= coef
            dense[grid.node_id((i + 1, j))] -= coef

    for i in range(n1 - 1):
        val, err = _integrate(tp.psi_1, xs[i], xs[i + 1], form.x_breaks)
        err_total += err
        coef = val / (xs[i + 1] - xs[i])
        dense[grid.node_id((i + 1, 0))] += coef
        dense[grid.node_id((i, 0))] -= coef
    for j in range(n2 - 1):
        val, err = _integrate(tp.psi_2, ys[j], ys[j + 1], form.y_breaks)
        err_total += err
        coef = val / (ys[j + 1] - ys[j])
        dense[grid.node_id((0, j + 1))] += coef
        dense[grid.node_id((0, j))] -= coef

    if err_total > QUAD_TOL:
        raise QuadratureFailure(f"accumulated quadrature error {err_total:.2e}")
    nz = np.nonzero(dense)[0]
    return Row(nz, dense[nz], rhs, quad_error=err_total)


def ls_integral_pla(
    rect: Sequence[tuple[float, float]],
    corner_values: np.ndarray,
    psi: Callable[[float, float], float],
    diagonal: str = "main",
    breaks: Sequence[float] = (),
) -> float:
    """integral(psi dF) for a two-piece piecewise-linear F on one rectangle.

    ``corner_values`` is [[F(a0,b0), F(a0,b1)], [F(a1,b0), F(a1,b1)]].  The
    measure induced by such an F concentrates uniformly (in the first
    coordinate) on the dividing diagonal, so the 2-D integral collapses to
    a single 1-D integral along it.
    """
    (a0, a1), (b0, b1) = rect
    cv = np.asarray(corner_values, dtype=float)
    mass = float(cv[1, 1] - cv[0, 1] - cv[1, 0] + cv[0, 0])
    if diagonal == "main":
        diag = lambda x: b0 + (x - a0) * (b1 - b0) / (a1 - a0)
    elif diagonal == "counter":
        diag = lambda x: b1 - (x - a0) * (b1 - b0) / (a1 - a0)
    else:
        raise ValueError("diagonal must be 'main' or 'counter'")
    val, err = _integrate(lambda x: psi(x, diag(x)), a0, a1, breaks)
    if err > QUAD_TOL:
        raise QuadratureFailure(f"quadrature error {err:.2e}")
    return mass / (a1 - a0) * val
