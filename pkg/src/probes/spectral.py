"""
Hessian spectral norm by power iteration on finite-difference
Hessian-vector products

    Hv ~ (grad(theta + h v) - grad(theta - h v)) / 2h

so only gradients (analytic, or themselves central differences) are needed.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import structlog

from src.config import settings
from src.finite_diff import fd_gradient, hessian_vector_product
from src.models import SpectralNormEstimate

log = structlog.get_logger(__name__)

# Steps for the nested case (FD gradient inside an FD Hessian-vector product)
_NESTED_GRAD_STEP = 1e-4
_NESTED_HVP_STEP = 1e-3


def hessian_spectral_norm(
    lossfn: Callable[[np.ndarray], float],
    theta: np.ndarray,
    tol: float | None = None,
    max_iter: int | None = None,
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    seed: int = 0,
) -> SpectralNormEstimate:
    """sigma_1 of the Hessian of *lossfn* at *theta*.

    Converged when successive estimates agree to relative *tol*. Hitting
    *max_iter* returns the last estimate with converged=False.
    """
    tol = settings.power_iter_tol if tol is None else tol
    max_iter = settings.power_iter_max if max_iter is None else max_iter
    theta = np.asarray(theta, dtype=np.float64)

    if grad_fn is None:
        def grad(t: np.ndarray) -> np.ndarray:
            return fd_gradient(lossfn, t, _NESTED_GRAD_STEP)
        h = _NESTED_HVP_STEP
    else:
        grad = grad_fn
        h = settings.fd_hess_step

    v = np.random.default_rng(seed).standard_normal(theta.size)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        hv = hessian_vector_product(grad, theta, v, h)
        norm = float(np.linalg.norm(hv))
        if norm == 0.0:
            return SpectralNormEstimate(value=0.0, iterations=it, converged=True)
        if it > 1 and abs(norm - estimate) <= tol * norm:
            return SpectralNormEstimate(value=norm, iterations=it, converged=True)
        estimate = norm
        v = hv / norm

    log.warning("power_iteration_not_converged", iterations=max_iter, estimate=estimate)
    return SpectralNormEstimate(value=estimate, iterations=max_iter, converged=False)
