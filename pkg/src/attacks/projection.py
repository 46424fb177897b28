"""
Projection onto the feasible ball and uniform sampling inside it.
"""

from __future__ import annotations

import numpy as np

from src.models import Norm, NormBall

_MAX_REJECTIONS = 10_000


def project(delta: np.ndarray, ball: NormBall) -> np.ndarray:
    """Euclidean projection for p=2 (radial rescale), coordinate clip for p=inf."""
    return project_rows(np.asarray(delta, dtype=np.float64)[None, :], ball)[0]


def project_rows(deltas: np.ndarray, ball: NormBall) -> np.ndarray:
    """Row-wise `project` for a batch of perturbations (N, d)."""
    deltas = np.asarray(deltas, dtype=np.float64)
    eps = ball.epsilon
    if ball.p is Norm.LINF:
        return np.clip(deltas, -eps, eps)
    norms = np.linalg.norm(deltas, axis=1, keepdims=True)
    # delta *= eps / max(||delta||, eps); rows already inside are untouched
    scale = np.where(norms > eps, eps / np.maximum(norms, 1e-300), 1.0)
    return deltas * scale


def random_in_ball(rng: np.random.Generator, dim: int, ball: NormBall) -> np.ndarray:
    """Uniform draw: per-coordinate for p=inf, rejection from the cube for p=2."""
    eps = ball.epsilon
    if eps == 0.0:
        return np.zeros(dim)
    if ball.p is Norm.LINF:
        return rng.uniform(-eps, eps, size=dim)
    for _ in range(_MAX_REJECTIONS):
        candidate = rng.uniform(-eps, eps, size=dim)
        if np.linalg.norm(candidate) <= eps:
            return candidate
    # Cube-to-ball acceptance collapses in high dimension; sample radially instead
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    return direction * eps * rng.uniform() ** (1.0 / dim)


def on_boundary(delta: np.ndarray, ball: NormBall, tol: float = 1e-9) -> bool:
    return ball.epsilon > 0 and abs(ball.norm(delta) - ball.epsilon) <= tol
