"""
Brute-force argmax oracle for low-dimensional attacks.

Independent of the closed forms and of PGD: a full grid over the feasible
region, then projected ascent (to gradient tolerance) from delta = 0, from
the best grid node and from seeded random starts. Among candidates whose
loss is within 1e-12 of the best, the one with the smallest ||delta||_2
wins, which selects the minimum-norm maximizer when the maximizers form a
set.
"""

from __future__ import annotations

import itertools

import numpy as np
import structlog

from src.attacks.ascent import projected_ascent
from src.attacks.projection import on_boundary, project, random_in_ball
from src.config import settings
from src.exceptions import UnsupportedDimensionError
from src.model_core.base import DifferentiableModel
from src.models import AttackResult, Norm, NormBall

log = structlog.get_logger(__name__)

MAX_ORACLE_DIM = 3
_TIE_TOL = 1e-12
# Grid points per axis in 3-D, where the default 2-D resolution would explode
_RESOLUTION_3D = 41


def _grid(ball: NormBall, dim: int, resolution: int) -> np.ndarray:
    axis = np.linspace(-ball.epsilon, ball.epsilon, resolution)
    nodes = np.array(list(itertools.product(axis, repeat=dim)))
    if ball.p is Norm.L2:
        nodes = nodes[np.linalg.norm(nodes, axis=1) <= ball.epsilon * (1 + 1e-12)]
    return nodes


def argmax_oracle(
    model: DifferentiableModel,
    theta: np.ndarray,
    x: np.ndarray,
    y: float,
    ball: NormBall,
    resolution: int | None = None,
    restarts: int | None = None,
    seed: int = 0,
) -> AttackResult:
    theta = np.asarray(theta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    dim = x.size
    if dim > MAX_ORACLE_DIM:
        raise UnsupportedDimensionError(f"argmax oracle supports d <= {MAX_ORACLE_DIM}, got {dim}")
    if resolution is None:
        resolution = settings.oracle_resolution if dim <= 2 else _RESOLUTION_3D
    restarts = settings.oracle_restarts if restarts is None else restarts

    if ball.epsilon == 0.0:
        return AttackResult(
            delta=np.zeros(dim),
            x_prime=x.copy(),
            achieved_loss=model.loss(theta, x, y),
            on_boundary=False,
        )

    nodes = _grid(ball, dim, resolution)
    node_losses = model.loss_batch(theta, x + nodes, np.full(len(nodes), float(y)))
    grid_best = nodes[int(np.argmax(node_losses))]

    rng = np.random.default_rng(seed)
    starts = [np.zeros(dim), grid_best]
    starts += [random_in_ball(rng, dim, ball) for _ in range(restarts)]

    def fn(delta: np.ndarray) -> float:
        return model.loss(theta, x + delta, y)

    def grad_fn(delta: np.ndarray) -> np.ndarray:
        return model.loss_and_grads(theta, x + delta, y)[2]

    def proj(delta: np.ndarray) -> np.ndarray:
        return project(delta, ball)

    candidates = [(float(node_losses.max()), grid_best, 0)]
    for start in starts:
        delta, value, iters = projected_ascent(fn, grad_fn, start, proj)
        candidates.append((value, delta, iters))

    top = max(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] >= top - _TIE_TOL]
    value, delta, iters = min(tied, key=lambda c: float(np.linalg.norm(c[1])))

    return AttackResult(
        delta=delta,
        x_prime=x + delta,
        achieved_loss=value,
        on_boundary=on_boundary(delta, ball),
        iterations=iters,
    )
