"""
Outer parameter updates.

ensgd_step moves theta toward the Langevin mean theta_bar along the
local-entropy gradient gamma (theta - theta_bar). The second-order variant
preconditions every coordinate with h_j = 1 / (gamma - gamma^2 var_j), the
inverse diagonal of -hess F = gamma I - gamma^2 Cov. The variance is clamped
to [0, (1 - floor) / gamma] so the denominator never drops below
gamma * floor.

sgd_step is the heavy-ball baseline with L2 weight decay folded into the
gradient.
"""

from __future__ import annotations

import numpy as np
import structlog

from src.models import EnsgdConfig, EnsgdState, UpdateOrder

log = structlog.get_logger(__name__)


def second_order_scale(state: EnsgdState, cfg: EnsgdConfig) -> np.ndarray:
    """h_j per coordinate, after clamping the variance estimate."""
    limit = (1.0 - cfg.variance_floor) / cfg.gamma
    var = state.variance()
    clamped = var > limit
    if clamped.any():
        log.debug("ensgd_variance_clamped", coordinates=int(clamped.sum()), limit=limit)
    var = np.minimum(var, limit)
    return 1.0 / (cfg.gamma - cfg.gamma**2 * var)


def ensgd_step(
    theta: np.ndarray,
    state: EnsgdState,
    cfg: EnsgdConfig,
    eta: float | None = None,
) -> np.ndarray:
    """One outer EntropySGD step; *eta* overrides cfg.eta (learning-rate schedules)."""
    theta = np.asarray(theta, dtype=np.float64)
    if state.theta_bar.shape != theta.shape:
        raise ValueError(f"state dim {state.theta_bar.shape} does not match theta {theta.shape}")
    eta = cfg.eta if eta is None else eta
    displacement = theta - state.theta_bar
    if cfg.order is UpdateOrder.FIRST:
        return theta - eta * cfg.gamma * displacement
    return theta - eta * cfg.gamma * second_order_scale(state, cfg) * displacement


def sgd_step(
    theta: np.ndarray,
    grad: np.ndarray,
    momentum_buffer: np.ndarray,
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=np.float64)
    buffer = momentum * np.asarray(momentum_buffer, dtype=np.float64) + (grad + weight_decay * theta)
    return theta - lr * buffer, buffer
