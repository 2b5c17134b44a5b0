"""Bounded Nelder-Mead simplex minimization with penalty constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class ObjectiveSpec:
    """A scalar cost over a box, with optional weighted penalty terms.

    Each penalty is ``(fn, weight)``; ``fn(x)`` returns the constraint
    violation (<= 0 when satisfied) and ``weight * max(0, fn(x))`` is added
    to the cost.
    """

    evaluator: Callable[[np.ndarray], float]
    bounds: Sequence[tuple[float, float]]
    penalties: Sequence[tuple[Callable[[np.ndarray], float], float]] = ()

    def __post_init__(self):
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"invalid bounds [{lo}, {hi}]")

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def project(self, x: np.ndarray) -> np.ndarray:
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.clip(x, lo, hi)

    def cost(self, x: np.ndarray) -> float:
        c = float(self.evaluator(x))
        for fn, w in self.penalties:
            c += w * max(0.0, float(fn(x)))
        return c


@dataclass
class OptimizeResult:
    x: np.ndarray
    cost: float
    converged: bool
    iterations: int
    evaluations: int
    restarted: bool
    trace: list[tuple[int, float, np.ndarray]] = field(repr=False, default_factory=list)
    evaluated: list[np.ndarray] = field(repr=False, default_factory=list)

    def trace_csv(self) -> str:
        d = len(self.x)
        rows = ["iter,cost_best," + ",".join(f"x_{i + 1}" for i in range(d))]
        for it, c, x in self.trace:
            rows.append(f"{it},{c!r}," + ",".join(repr(float(v)) for v in x))
        return "\n".join(rows) + "\n"


def _initial_simplex(spec: ObjectiveSpec, x0: np.ndarray) -> np.ndarray:
    d = len(x0)
    simplex = np.tile(x0, (d + 1, 1))
    for i, (lo, hi) in enumerate(spec.bounds):
        width = hi - lo
        step = 0.05 * width if np.isfinite(width) else 0.05 * max(abs(x0[i]), 1.0)
        step = max(step, 1e-8)
        # step towards the interior when x0 sits on the upper face
        if x0[i] + step > hi:
            step = -step
        simplex[i + 1, i] += step
    return spec.project(simplex)


def nelder_mead(spec: ObjectiveSpec, x0, tol: float = 1e-8, max_iter: int = 5000,
                restart: bool = True) -> OptimizeResult:
    """Minimize ``spec.cost`` from ``x0``.

    Standard reflection/expansion/contraction/shrink with coefficients
    (1, 2, 0.5, 0.5).  Stops when the simplex diameter drops below ``tol`` or
    after ``max_iter`` iterations (``converged=False``).  Proposals outside
    the box are projected onto it.  One restart from the best vertex is made
    when diameter convergence followed a shrink that still improved the
    best cost by more than ``tol``.
    """
    x0 = np.asarray(x0, dtype=float)
    if len(x0) != spec.dimension:
        raise ValueError("x0 dimension does not match bounds")
    if not np.array_equal(spec.project(x0), x0):
        raise ValueError("x0 lies outside the bounds")

    evaluated: list[np.ndarray] = []

    def f(x):
        evaluated.append(x.copy())
        return spec.cost(x)

    trace: list[tuple[int, float, np.ndarray]] = []
    it = 0
    restarted = False
    converged = False
    start = x0
    while True:
        simplex = _initial_simplex(spec, start)
        costs = np.array([f(v) for v in simplex])
        shrink_gain = 0.0
        while it < max_iter:
            order = np.argsort(costs, kind="stable")
            simplex, costs = simplex[order], costs[order]
            trace.append((it, float(costs[0]), simplex[0].copy()))
            diam = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
            if diam < tol:
                converged = True
                break
            it += 1
            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            xr = spec.project(centroid + REFLECT * (centroid - worst))
            fr = f(xr)
            if fr < costs[0]:
                xe = spec.project(centroid + EXPAND * (xr - centroid))
                fe = f(xe)
                if fe < fr:
                    simplex[-1], costs[-1] = xe, fe
                else:
                    simplex[-1], costs[-1] = xr, fr
                continue
            if fr < costs[-2]:
                simplex[-1], costs[-1] = xr, fr
                continue
            if fr < costs[-1]:
                xc = spec.project(centroid + CONTRACT * (xr - centroid))
                fc = f(xc)
                if fc <= fr:
                    simplex[-1], costs[-1] = xc, fc
                    continue
            else:
                xc = spec.project(centroid + CONTRACT * (worst - centroid))
                fc = f(xc)
                if fc < costs[-1]:
                    simplex[-1], costs[-1] = xc, fc
                    continue
            best_before = costs[0]
            simplex[1:] = spec.project(simplex[0] + SHRINK * (simplex[1:] - simplex[0]))
            costs[1:] = [f(v) for v in simplex[1:]]
            shrink_gain = best_before - costs.min()
        if converged and restart and not restarted and shrink_gain > tol:
            restarted = True
            converged = False
            start = simplex[0].copy()
            continue
        break

    return OptimizeResult(simplex[0].copy(), float(costs[0]), converged, it,
                          len(evaluated), restarted, trace, evaluated)
