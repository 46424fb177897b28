"""
epsilon-sharpness of a loss at theta:

    max_{||v||_2 <= eps_s} (L(theta + v) - L(theta)) / (1 + L(theta))

solved by multi-start projected ascent, reported next to its quadratic
model sigma_1 * eps_s^2 / (2 (1 + L(theta))).
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import structlog

from src.attacks.ascent import projected_ascent
from src.attacks.projection import project
from src.finite_diff import fd_gradient
from src.models import Norm, NormBall, SharpnessEstimate
from src.probes.spectral import hessian_spectral_norm

log = structlog.get_logger(__name__)


def epsilon_sharpness(
    lossfn: Callable[[np.ndarray], float],
    theta: np.ndarray,
    eps_s: float,
    restarts: int = 8,
    seed: int = 0,
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> SharpnessEstimate:
    if eps_s <= 0:
        raise ValueError("eps_s must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    ball = NormBall(p=Norm.L2, epsilon=eps_s)
    grad = grad_fn if grad_fn is not None else (lambda t: fd_gradient(lossfn, t))

    base = float(lossfn(theta))
    rng = np.random.default_rng(seed)
    starts = [np.zeros_like(theta)]
    for _ in range(restarts):
        direction = rng.standard_normal(theta.size)
        starts.append(eps_s * direction / np.linalg.norm(direction))

    best = base
    for start in starts:
        _, value, _ = projected_ascent(
            lambda v: float(lossfn(theta + v)),
            lambda v: grad(theta + v),
            start,
            lambda v: project(v, ball),
            max_iter=200,
            grad_tol=1e-9,
        )
        best = max(best, value)

    sigma1 = hessian_spectral_norm(lossfn, theta, grad_fn=grad_fn, seed=seed).value
    exact = (best - base) / (1.0 + base)
    approximation = sigma1 * eps_s**2 / (2.0 * (1.0 + base))
    log.debug("epsilon_sharpness", exact=exact, approximation=approximation, radius=eps_s)
    return SharpnessEstimate(
        exact=exact,
        approximation=approximation,
        spectral_norm=sigma1,
        base_loss=base,
        radius=eps_s,
    )
