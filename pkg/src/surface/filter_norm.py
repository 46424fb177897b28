"""
Filter-normalized 1-D loss slices around a trained parameter vector.

A Gaussian direction d is drawn and every filter block (one row of an Mlp
weight matrix, one bias vector, or the whole vector of a single-layer model)
is rescaled to the norm of the matching block of theta*. The curve is the
adversarial loss at theta* + alpha d for each alpha. Zero-norm blocks get a
zero direction.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import structlog

from src.attacks.pgd import pgd_batch
from src.model_core.base import DifferentiableModel
from src.models import NormBall, PgdConfig, SliceCurve

log = structlog.get_logger(__name__)

DEFAULT_ALPHAS = [round(-1.0 + 0.1 * k, 10) for k in range(21)]


def filter_normalized_direction(
    model: DifferentiableModel, theta: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    d = rng.standard_normal(theta.size)
    for block in model.filter_blocks():
        target = float(np.linalg.norm(theta[block]))
        norm = float(np.linalg.norm(d[block]))
        d[block] = d[block] * (target / norm) if target > 0 and norm > 0 else 0.0
    return d


def filter_normalized_slice(
    model: DifferentiableModel,
    theta_star: np.ndarray,
    data: tuple[np.ndarray, np.ndarray],
    ball: NormBall,
    pgd: PgdConfig,
    n_directions: int = 1,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    seed: int = 0,
) -> list[SliceCurve]:
    """Adversarial-loss curves along *n_directions* filter-normalized directions."""
    if any(abs(a) > 1.0 for a in alphas):
        raise ValueError("alphas must lie in [-1, 1]")
    theta_star = np.asarray(theta_star, dtype=np.float64)
    X, y = data
    rng = np.random.default_rng(seed)

    def adversarial_loss(theta: np.ndarray) -> float:
        _, losses, _ = pgd_batch(model, theta, X, y, ball, pgd)
        return float(losses.mean())

    curves = []
    for k in range(n_directions):
        d = filter_normalized_direction(model, theta_star, rng)
        losses = [adversarial_loss(theta_star + a * d) for a in alphas]
        curves.append(SliceCurve(direction=k, alphas=list(alphas), losses=losses))
    log.info("filter_slices_sampled", directions=n_directions, points=len(alphas))
    return curves
