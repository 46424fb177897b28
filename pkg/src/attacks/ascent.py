"""
Projected gradient ascent with Armijo backtracking.

Used where an attack (or a parameter perturbation) has to be solved to
tolerance rather than for a fixed step budget: the brute-force argmax
oracle and the epsilon-sharpness inner maximization.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from src.config import settings

_ARMIJO = 1e-4
_MIN_STEP = 1e-16


def projected_ascent(
    fn: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    project: Callable[[np.ndarray], np.ndarray],
    max_iter: int | None = None,
    grad_tol: float | None = None,
    initial_step: float = 1.0,
) -> tuple[np.ndarray, float, int]:
    """Maximize fn over the set `project` maps onto. Returns (point, value, iterations).

    Stops when the projected-gradient step ||P(v + g) - v|| falls below
    grad_tol, when backtracking cannot find an ascent step, or at max_iter.
    """
    max_iter = settings.oracle_max_iter if max_iter is None else max_iter
    grad_tol = settings.ascent_grad_tol if grad_tol is None else grad_tol

    v = project(np.asarray(start, dtype=np.float64))
    f = fn(v)
    step = initial_step
    it = 0
    for it in range(1, max_iter + 1):
        g = grad_fn(v)
        if np.linalg.norm(project(v + g) - v) < grad_tol:
            break
        t = step
        while True:
            candidate = project(v + t * g)
            f_new = fn(candidate)
            if f_new >= f + _ARMIJO * float(g @ (candidate - v)):
                break
            t *= 0.5
            if t < _MIN_STEP:
                return v, f, it
        moved = float(np.linalg.norm(candidate - v))
        v, f = candidate, f_new
        if moved < grad_tol:
            break
        step = min(2.0 * t, 1e6)
    return v, f, it
