"""
Single-index logistic models: z = theta^T x (LinearLogistic) and
z = swish(theta^T x) (SwishLogistic). Both have m = d and closed-form
second derivatives.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from src.model_core.base import DifferentiableModel, logistic_curvature


class LinearLogistic(DifferentiableModel):
    @property
    def param_dim(self) -> int:
        return self.input_dim

    def outputs(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        return X @ theta

    def output_grads(self, theta, X):
        z = X @ theta
        return z, X.copy(), np.broadcast_to(theta, X.shape).copy()

    def hess_x(self, theta, x, y):
        theta = np.asarray(theta, dtype=np.float64)
        _, s2 = logistic_curvature(y, float(theta @ x))
        return s2 * np.outer(theta, theta)

    def cross_hess(self, theta, x, y):
        theta = np.asarray(theta, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        g, s2 = logistic_curvature(y, float(theta @ x))
        return g * np.eye(theta.size) + s2 * np.outer(theta, x)

    def layer_blocks(self) -> list[slice]:
        return [slice(0, self.param_dim)]


def swish(u: np.ndarray) -> np.ndarray:
    return u * expit(u)


def swish_prime(u: np.ndarray) -> np.ndarray:
    s = expit(u)
    return s + u * s * (1.0 - s)


def swish_second(u: np.ndarray) -> np.ndarray:
    s = expit(u)
    ds = s * (1.0 - s)
    return 2.0 * ds + u * ds * (1.0 - 2.0 * s)


def swish_stationary_point() -> float:
    """Unique root of d swish/du, the minimum of swish (about -1.278)."""
    return float(brentq(lambda u: float(swish_prime(u)), -2.0, -1.0, xtol=1e-14))


class SwishLogistic(DifferentiableModel):
    @property
    def param_dim(self) -> int:
        return self.input_dim

    def outputs(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        return swish(X @ theta)

    def output_grads(self, theta, X):
        u = X @ theta
        sp = swish_prime(u)
        return swish(u), sp[:, None] * X, sp[:, None] * theta[None, :]

    def _chain(self, theta, x, y) -> tuple[float, float]:
        # k = dl/du and k' = d^2 l/du^2 for u = theta^T x
        u = float(np.dot(theta, x))
        g, s2 = logistic_curvature(y, float(swish(u)))
        sp, spp = float(swish_prime(u)), float(swish_second(u))
        return g * sp, s2 * sp**2 + g * spp

    def hess_x(self, theta, x, y):
        theta = np.asarray(theta, dtype=np.float64)
        _, k2 = self._chain(theta, x, y)
        return k2 * np.outer(theta, theta)

    def cross_hess(self, theta, x, y):
        theta = np.asarray(theta, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        k, k2 = self._chain(theta, x, y)
        return k * np.eye(theta.size) + k2 * np.outer(theta, x)

    def layer_blocks(self) -> list[slice]:
        return [slice(0, self.param_dim)]
