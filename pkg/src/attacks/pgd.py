"""
Projected gradient attacks for any DifferentiableModel.

    p = inf : delta <- clip(delta + eta_P * sign(grad_x l), -eps, eps)
    p = 2   : delta <- project(delta + eta_P * grad_x l / ||grad_x l||)

The attack is run on a whole batch at once; every row owns its iterate and
its random start. The returned perturbation is the best iterate seen,
delta_0 included, so the achieved loss never drops below the starting loss
and never decreases as `steps` grows.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import structlog

from src.attacks.projection import on_boundary, project_rows, random_in_ball
from src.model_core.base import DifferentiableModel
from src.models import AttackResult, Norm, NormBall, PgdConfig

log = structlog.get_logger(__name__)

SeedKey = int | Sequence[int]


def _initial_deltas(
    n: int, dim: int, ball: NormBall, cfg: PgdConfig, seeds: Sequence[SeedKey] | None
) -> np.ndarray:
    if not cfg.random_init or ball.epsilon == 0.0:
        return np.zeros((n, dim))
    keys = seeds if seeds is not None else [(cfg.seed, i) for i in range(n)]
    return np.stack([
        random_in_ball(np.random.default_rng(np.random.SeedSequence(key)), dim, ball)
        for key in keys
    ])


def pgd_batch(
    model: DifferentiableModel,
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    ball: NormBall,
    cfg: PgdConfig,
    seeds: Sequence[SeedKey] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Attack every row of X. Returns (deltas, losses, degenerate flags).

    *seeds* holds one SeedSequence entropy key per row for the random start;
    by default row i uses (cfg.seed, i).
    """
    theta = np.asarray(theta, dtype=np.float64)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, dim = X.shape

    delta = _initial_deltas(n, dim, ball, cfg, seeds)
    best_delta = delta.copy()
    best_loss = model.loss_batch(theta, X + delta, y)
    degenerate = np.zeros(n, dtype=bool)
    if ball.epsilon == 0.0:
        return best_delta, best_loss, degenerate

    for _ in range(cfg.steps):
        _, _, grad_x = model.batch_grads(theta, X + delta, y)
        if ball.p is Norm.LINF:
            direction = np.sign(grad_x)
            stalled = ~np.any(direction != 0.0, axis=1)
        else:
            norms = np.linalg.norm(grad_x, axis=1, keepdims=True)
            stalled = norms[:, 0] == 0.0
            direction = np.where(norms > 0.0, grad_x / np.where(norms > 0.0, norms, 1.0), 0.0)
        # Zero gradient: the iterate stays put
        degenerate |= stalled
        delta = project_rows(delta + cfg.step_size * direction, ball)
        losses = model.loss_batch(theta, X + delta, y)
        improved = losses > best_loss
        best_delta[improved] = delta[improved]
        best_loss = np.where(improved, losses, best_loss)

    if degenerate.any():
        log.debug("pgd_zero_gradient", rows=int(degenerate.sum()), batch=n)
    return best_delta, best_loss, degenerate


def pgd_attack(
    model: DifferentiableModel,
    theta: np.ndarray,
    x: np.ndarray,
    y: float,
    ball: NormBall,
    cfg: PgdConfig,
) -> AttackResult:
    """Single-example PGD; the random start is drawn from cfg.seed."""
    x = np.asarray(x, dtype=np.float64)
    deltas, losses, degenerate = pgd_batch(
        model, theta, x[None, :], np.array([y], dtype=np.float64), ball, cfg, seeds=[cfg.seed]
    )
    delta = deltas[0]
    return AttackResult(
        delta=delta,
        x_prime=x + delta,
        achieved_loss=float(losses[0]),
        on_boundary=on_boundary(delta, ball),
        degenerate=bool(degenerate[0]),
        iterations=cfg.steps,
    )


def adversarial_batch(
    model: DifferentiableModel,
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    ball: NormBall,
    cfg: PgdConfig,
    seeds: Sequence[SeedKey] | None = None,
) -> np.ndarray:
    """Perturbed inputs X + delta for a batch."""
    deltas, _, _ = pgd_batch(model, theta, X, y, ball, cfg, seeds)
    return np.atleast_2d(X) + deltas
