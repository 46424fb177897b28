"""
Langevin estimate of the local-entropy mean E[theta'].

The inner loop descends the local objective L(theta') + gamma/2 ||theta' - theta||^2
with thermal noise,

    theta' <- theta' - eta' (grad L(theta') + gamma (theta' - theta)) + sqrt(eta') eps * N(0, I)

and keeps exponential running averages of theta' and theta' * theta'. The
descent sign is the one whose running mean converges to the quadrature mean
of the Gibbs measure exp(-L(theta') - gamma/2 ||theta - theta'||^2).
"""

from __future__ import annotations

import numpy as np
import structlog

from src.entropy.objectives import LangevinObjective
from src.models import EnsgdConfig, EnsgdState

log = structlog.get_logger(__name__)


def sgld_estimate(
    objective: LangevinObjective,
    theta: np.ndarray,
    cfg: EnsgdConfig,
    seed: int | np.random.SeedSequence = 0,
) -> EnsgdState:
    theta = np.asarray(theta, dtype=np.float64)
    rng = np.random.default_rng(seed)
    noise_scale = np.sqrt(cfg.eta_prime) * cfg.eps_langevin

    theta_prime = theta.copy()
    theta_bar = theta.copy()
    xi_bar = theta * theta
    for _ in range(cfg.langevin_iters):
        _, grad = objective.loss_and_grad(theta_prime, rng)
        d_theta_prime = grad + cfg.gamma * (theta_prime - theta)
        noise = rng.standard_normal(theta.size)
        theta_prime = theta_prime - cfg.eta_prime * d_theta_prime + noise_scale * noise
        theta_bar = (1.0 - cfg.alpha) * theta_bar + cfg.alpha * theta_prime
        xi_bar = (1.0 - cfg.alpha) * xi_bar + cfg.alpha * theta_prime * theta_prime

    log.debug(
        "sgld_estimate",
        iters=cfg.langevin_iters,
        drift=float(np.linalg.norm(theta_bar - theta)),
    )
    return EnsgdState(
        theta_bar=theta_bar,
        xi_bar=xi_bar,
        steps_taken=cfg.langevin_iters,
        minibatches=cfg.langevin_iters,
    )
