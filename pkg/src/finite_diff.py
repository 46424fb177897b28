"""
Central finite differences used as oracles and as the second-derivative
engine of the Mlp.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from src.config import settings

ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]


def fd_gradient(fn: ScalarFn, x: np.ndarray, h: float | None = None) -> np.ndarray:
    h = settings.fd_grad_step if h is None else h
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return grad


def fd_jacobian(fn: VectorFn, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """J[i, j] = d fn_i / d x_j."""
    h = settings.fd_hess_step if h is None else h
    x = np.asarray(x, dtype=np.float64)
    columns = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        columns.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * h))
    return np.stack(columns, axis=1)


def fd_hessian_from_grad(grad_fn: VectorFn, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """Symmetrized Jacobian of an analytic gradient."""
    jac = fd_jacobian(grad_fn, x, h)
    return 0.5 * (jac + jac.T)


def fd_hessian(fn: ScalarFn, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """Dense Hessian of a scalar function from function values only."""
    h = settings.fd_hess_step if h is None else h
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    hess = np.empty((n, n))
    f0 = fn(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        hess[i, i] = (fn(x + ei) - 2.0 * f0 + fn(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            value = (
                fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4.0 * h**2)
            hess[i, j] = hess[j, i] = value
    return hess


def hessian_vector_product(
    grad_fn: VectorFn, x: np.ndarray, v: np.ndarray, h: float | None = None
) -> np.ndarray:
    """(grad(x + h v) - grad(x - h v)) / 2h."""
    h = settings.fd_hess_step if h is None else h
    return (np.asarray(grad_fn(x + h * v)) - np.asarray(grad_fn(x - h * v))) / (2.0 * h)


def dense_spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value; for symmetric input this is max |eigenvalue|."""
    return float(np.linalg.norm(np.asarray(matrix, dtype=np.float64), ord=2))
