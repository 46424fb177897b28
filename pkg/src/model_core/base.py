"""
Abstract base class for the differentiable toy models (Strategy Pattern).

Every model is a scalar-output classifier z = f(theta, x) trained with the
logistic loss

    l(x, y, theta) = log(1 + exp(-y * z))

written in the overflow-free form max(-t, 0) + log1p(exp(-|t|)) with t = y*z.
Subclasses only supply the raw output and its first derivatives; the loss,
its gradients and batching live here. Parameters are never stored on the
model beyond the read-only initial vector `theta0`: every operation takes
theta explicitly, so a model can be shared across threads.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from scipy.special import expit

from src.exceptions import NumericalOverflowError
from src.models import ModelSpec


def logistic_loss(t: np.ndarray) -> np.ndarray:
    """log(1 + exp(-t)), stable for any finite t."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(-t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def _check_finite(name: str, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalOverflowError(f"non-finite value in {name}")


class DifferentiableModel(ABC):
    """Interface every toy model must satisfy."""

    def __init__(self, spec: ModelSpec, theta0: np.ndarray) -> None:
        self.spec = spec
        theta0 = np.array(theta0, dtype=np.float64)
        theta0.setflags(write=False)
        self.theta0 = theta0

    @property
    def input_dim(self) -> int:
        return self.spec.input_dim

    @property
    @abstractmethod
    def param_dim(self) -> int: ...

    # --- subclass hooks -----------------------------------------------------

    @abstractmethod
    def outputs(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Raw outputs z for a batch X of shape (N, d). Returns shape (N,)."""
        ...

    @abstractmethod
    def output_grads(
        self, theta: np.ndarray, X: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(z, dz/dtheta, dz/dx) with shapes (N,), (N, m), (N, d)."""
        ...

    @abstractmethod
    def hess_x(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        """Symmetric d x d input Hessian of the loss."""
        ...

    @abstractmethod
    def cross_hess(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        """d x m matrix with entry (i, j) = d^2 l / dx_i dtheta_j."""
        ...

    @abstractmethod
    def layer_blocks(self) -> list[slice]:
        """Per weight/bias block partition of theta."""
        ...

    def filter_blocks(self) -> list[slice]:
        return self.layer_blocks()

    # --- shared machinery ---------------------------------------------------

    def loss_batch(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        z = self.outputs(np.asarray(theta, dtype=np.float64), np.atleast_2d(X))
        losses = logistic_loss(np.asarray(y, dtype=np.float64) * z)
        _check_finite("loss", losses)
        return losses

    def loss(self, theta: np.ndarray, x: np.ndarray, y: float) -> float:
        return float(self.loss_batch(theta, np.asarray(x)[None, :], np.array([y]))[0])

    def batch_grads(
        self, theta: np.ndarray, X: np.ndarray, y: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-example (loss, grad_theta, grad_x) with shapes (N,), (N, m), (N, d)."""
        y = np.asarray(y, dtype=np.float64)
        z, dz_dtheta, dz_dx = self.output_grads(np.asarray(theta, dtype=np.float64),
                                                np.atleast_2d(X))
        losses = logistic_loss(y * z)
        # dl/dz = -y * sigmoid(-y z)
        g = -y * expit(-y * z)
        grad_theta = g[:, None] * dz_dtheta
        grad_x = g[:, None] * dz_dx
        _check_finite("loss_and_grads", losses, grad_theta, grad_x)
        return losses, grad_theta, grad_x

    def loss_and_grads(
        self, theta: np.ndarray, x: np.ndarray, y: float
    ) -> tuple[float, np.ndarray, np.ndarray]:
        losses, grad_theta, grad_x = self.batch_grads(
            theta, np.asarray(x, dtype=np.float64)[None, :], np.array([y], dtype=np.float64)
        )
        return float(losses[0]), grad_theta[0], grad_x[0]

    def mean_loss_and_grad(
        self, theta: np.ndarray, X: np.ndarray, y: np.ndarray
    ) -> tuple[float, np.ndarray]:
        losses, grad_theta, _ = self.batch_grads(theta, X, y)
        return float(losses.mean()), grad_theta.mean(axis=0)

    def predict(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        """sign of the raw output; an exact zero stays 0 and never matches a label."""
        return np.sign(self.outputs(np.asarray(theta, dtype=np.float64), np.atleast_2d(X)))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.input_dim}, m={self.param_dim})"


def logistic_curvature(y: float, z: float) -> tuple[float, float]:
    """(dl/dz, d^2 l/dz^2) of the logistic loss at raw output z."""
    s = float(expit(-y * z))
    return -y * s, s * (1.0 - s)
