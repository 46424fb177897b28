"""
Adversarial weight perturbation: a layerwise-normalized ascent on the
adversarial batch loss,

    max_v  mean_i l(x_i + delta_i, y_i, theta + v)   s.t. ||v_l|| = gamma_a ||theta_l||

for every layer block l. Each ascent step moves a block along its own
normalized gradient and rescales it back onto its sphere. Blocks whose
weights are all zero get v_l = 0; a block with zero gradient is pushed
along its own weights.
"""

from __future__ import annotations

import numpy as np
import structlog

from src.attacks.pgd import adversarial_batch
from src.model_core.base import DifferentiableModel
from src.models import AwpConfig, NormBall, PgdConfig

log = structlog.get_logger(__name__)


def awp_perturbation(
    model: DifferentiableModel,
    theta: np.ndarray,
    batch: tuple[np.ndarray, np.ndarray],
    ball: NormBall,
    pgd: PgdConfig,
    awp: AwpConfig,
    seed: int = 0,
    adversarial: np.ndarray | None = None,
) -> np.ndarray:
    """Weight perturbation v for one batch. *adversarial* reuses attacked inputs."""
    theta = np.asarray(theta, dtype=np.float64)
    v = np.zeros_like(theta)
    if awp.gamma_a == 0.0:
        return v

    X, y = batch
    if adversarial is None:
        seeds = [(seed, i) for i in range(len(y))]
        adversarial = adversarial_batch(model, theta, X, y, ball, pgd, seeds)

    blocks = model.layer_blocks()
    radii = [awp.gamma_a * float(np.linalg.norm(theta[b])) for b in blocks]
    for _ in range(awp.inner_steps):
        _, grad = model.mean_loss_and_grad(theta + v, adversarial, y)
        for block, radius in zip(blocks, radii, strict=True):
            if radius == 0.0:
                v[block] = 0.0
                continue
            g_norm = float(np.linalg.norm(grad[block]))
            if g_norm > 0.0:
                v[block] += awp.step_size * radius * grad[block] / g_norm
            v_norm = float(np.linalg.norm(v[block]))
            if v_norm > 0.0:
                v[block] *= radius / v_norm
            else:
                # flat block: scale the weights themselves onto the sphere
                log.debug("awp_block_stalled", start=block.start, stop=block.stop)
                v[block] = radius * theta[block] / float(np.linalg.norm(theta[block]))
    return v
