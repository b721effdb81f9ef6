"""Derivative-free maximization over the probability simplex.

The inner worst-case value is a nonsmooth function of the allocation, so
the outer search runs Nelder-Mead on a softmax reparameterization of the
simplex (unconstrained R^{n-1} -> interior), from several starts: the
uniform point, the best vertices, and seeded Dirichlet draws.  A pairwise
mass-transfer polish (1-D bounded searches between coordinate pairs)
sharpens the incumbent, which matters because optima often sit on faces
the softmax chart cannot reach exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

PENALTY = -1e9


@dataclass
class DfreeConfig:
    budget: int = 1200          # max inner evaluations per restart
    restarts: int = 4
    seed: int = 0
    polish_rounds: int = 2
    trace_cap: int = 50_000


@dataclass
class OuterResult:
    z: np.ndarray
    value: float
    trace: list[tuple[np.ndarray, float]] = field(default_factory=list)
    evaluations: int = 0
    status: str = "converged"


def softmax_simplex(phi: np.ndarray) -> np.ndarray:
    full = np.append(phi, 0.0)
    full = full - full.max()
    e = np.exp(full)
    return e / e.sum()


def _to_phi(z: np.ndarray, floor: float = 1e-9) -> np.ndarray:
    z = np.clip(z, floor, None)
    z = z / z.sum()
    return np.log(z[:-1]) - np.log(z[-1])


def outer_solve(
    value_fn: Callable[[np.ndarray], float | None],
    n: int,
    config: DfreeConfig | None = None,
) -> OuterResult:
    """Best allocation found by multi-start Nelder-Mead plus pair polish.

    ``value_fn`` returns the inner value at z, or None when z is outside
    the feasible region (the separate-robustness gate); such points are
    penalized, never returned.
    """
    cfg = config or DfreeConfig()
    rng = np.random.default_rng(cfg.seed)
    trace: list[tuple[np.ndarray, float]] = []
    count = 0

    def f(z: np.ndarray) -> float:
        nonlocal count
        count += 1
        v = value_fn(z)
        v = PENALTY if v is None else float(v)
        if len(trace) < cfg.trace_cap:
            trace.append((z.copy(), v))
        return v

    # Vertex and coordinate-pair probes seed the incumbent and rank warm
    # starts; optima of these problems often sit on low-dimensional faces.
    best_z, best_v = None, -np.inf
    vertex_vals = []
    for i in range(n):
        z = np.zeros(n)
        z[i] = 1.0
        v = f(z)
        vertex_vals.append((v, i))
        if v > best_v:
            best_z, best_v = z, v
    vertex_vals.sort(reverse=True)

    thorough = cfg.budget >= 300
    pair_best: list[tuple[float, np.ndarray]] = []
    for i in range(n):
        for j in range(i + 1, n):
            v, z = _best_on_pair_face(f, n, i, j, thorough)
            pair_best.append((v, z))
            if v > best_v:
                best_z, best_v = z, v
    pair_best.sort(key=lambda t: -t[0])

    starts = [np.full(n, 1.0 / n)]
    for v, i in vertex_vals[:1]:
        z = np.full(n, 0.05 / (n - 1))
        z[i] = 0.95
        starts.append(z / z.sum())
    for v, z in pair_best[: max(1, cfg.restarts - 2)]:
        starts.append(0.94 * z + 0.06 / n)
    while len(starts) < cfg.restarts + 1:
        starts.append(rng.dirichlet(np.ones(n)))

    hit_budget = False
    for z0 in starts:
        res = minimize(
            lambda phi: -f(softmax_simplex(phi)),
            _to_phi(z0),
            method="Nelder-Mead",
            options={
                "maxfev": cfg.budget,
                "xatol": 1e-7,
                "fatol": 1e-10,
                "adaptive": n > 4,
            },
        )
        hit_budget |= not res.success
        z = softmax_simplex(res.x)
        v = f(z)
        if v > best_v:
            best_z, best_v = z, v

    for _ in range(cfg.polish_rounds):
        z, v, improved = _pair_polish(f, best_z, best_v, thorough)
        if v > best_v:
            best_z, best_v = z, v
        if not improved:
            break

    return OuterResult(
        best_z, best_v, trace, count, "budget_exhausted" if hit_budget else "converged"
    )


def _best_on_pair_face(
    f: Callable[[np.ndarray], float], n: int, i: int, j: int, thorough: bool = True
) -> tuple[float, np.ndarray]:
    """Optimize the 1-D restriction z = t e_i + (1-t) e_j (scan + refine)."""

    def zt(t: float) -> np.ndarray:
        z = np.zeros(n)
        z[i], z[j] = t, 1.0 - t
        return z

    n_knots = 17 if thorough else 7
    knots = np.linspace(0.0, 1.0, n_knots)
    scan = sorted(((f(zt(t)), t) for t in knots), reverse=True)
    best_v, best_t = scan[0]
    window = 1.0 / (n_knots - 1)
    # Refine around the best knots; the slices are multi-modal.
    for sv, st in scan[: 2 if thorough else 1]:
        res = minimize_scalar(
            lambda t: -f(zt(t)),
            bounds=(max(0.0, st - window), min(1.0, st + window)),
            method="bounded",
            options={"xatol": 1e-10 if thorough else 1e-6, "maxiter": 60 if thorough else 16},
        )
        if -res.fun > best_v:
            best_v, best_t = -res.fun, float(res.x)
    return best_v, zt(best_t)


def _pair_polish(
    f: Callable[[np.ndarray], float], z: np.ndarray, v: float, thorough: bool = True
) -> tuple[np.ndarray, float, bool]:
    """One sweep of optimal mass transfers between coordinate pairs.

    Each slice is scanned on a coarse grid first (the slices are piecewise
    and not unimodal) and the best knot is refined locally.
    """
    n = z.size
    best_z, best_v = z.copy(), v
    improved = False
    for i in range(n):
        for j in range(n):
            if i == j or best_z[i] <= 1e-12:
                continue
            hi = best_z[i]

            def val(t: float, _i=i, _j=j) -> float:
                cand = best_z.copy()
                cand[_i] -= t
                cand[_j] += t
                return f(cand)

            knots = np.linspace(0.0, hi, 9 if thorough else 5)[1:]
            scan = [(val(t), t) for t in knots]
            scan_v, scan_t = max(scan)
            step = hi / (8.0 if thorough else 4.0)
            res = minimize_scalar(
                lambda t: -val(t),
                bounds=(max(0.0, scan_t - step), min(hi, scan_t + step)),
                method="bounded",
                options={"xatol": 1e-10 if thorough else 1e-6,
                         "maxiter": 60 if thorough else 16},
            )
            cand_v, cand_t = max((scan_v, scan_t), (-res.fun, float(res.x)))
            accept = cand_v > best_v + 1e-12
            if not accept and cand_v >= best_v - 1e-9 and cand_t >= hi - 1e-12:
                # Value-neutral full transfer: take it, it empties one
                # coordinate, and later sweeps often improve from there.
                accept = True
                cand_t = hi
            if accept:
                if cand_v > best_v + 1e-12:
                    improved = True
                best_v = cand_v
                best_z[i] -= cand_t
                best_z[j] += cand_t
                np.clip(best_z, 0.0, None, out=best_z)
                best_z /= best_z.sum()
    return best_z, best_v, improved
