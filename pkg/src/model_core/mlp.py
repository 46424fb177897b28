"""
Small fully-connected network with a scalar output.

theta packs each layer as W (out x in, row-major) followed by b (out), from
the input layer to the output layer. First derivatives come from a batched
manual backward pass; input Hessians and cross Hessians are central
differences of the analytic grad_x.
"""

from __future__ import annotations

import numpy as np

from src.config import settings
from src.finite_diff import fd_jacobian
from src.model_core.base import DifferentiableModel
from src.model_core.linear import swish, swish_prime
from src.models import Activation, ModelSpec


class Mlp(DifferentiableModel):
    def __init__(self, spec: ModelSpec, theta0: np.ndarray, hess_step: float | None = None) -> None:
        self.widths = spec.widths
        self._shapes = list(zip(self.widths[1:], self.widths[:-1]))
        super().__init__(spec, theta0)
        self.hess_step = settings.fd_hess_step if hess_step is None else hess_step

    @staticmethod
    def count_params(widths: list[int]) -> int:
        return sum(n_out * n_in + n_out for n_in, n_out in zip(widths[:-1], widths[1:]))

    @property
    def param_dim(self) -> int:
        return self.count_params(self.widths)

    # --- packing ------------------------------------------------------------

    def unpack(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        layers, i = [], 0
        for n_out, n_in in self._shapes:
            W = theta[i : i + n_out * n_in].reshape(n_out, n_in)
            i += n_out * n_in
            b = theta[i : i + n_out]
            i += n_out
            layers.append((W, b))
        return layers

    def layer_blocks(self) -> list[slice]:
        blocks, i = [], 0
        for n_out, n_in in self._shapes:
            blocks.append(slice(i, i + n_out * n_in))
            i += n_out * n_in
            blocks.append(slice(i, i + n_out))
            i += n_out
        return blocks

    def filter_blocks(self) -> list[slice]:
        """One block per weight row (a unit's incoming filter) and per bias vector."""
        blocks, i = [], 0
        for n_out, n_in in self._shapes:
            for _ in range(n_out):
                blocks.append(slice(i, i + n_in))
                i += n_in
            blocks.append(slice(i, i + n_out))
            i += n_out
        return blocks

    # --- activation ---------------------------------------------------------

    def _act(self, u: np.ndarray) -> np.ndarray:
        if self.spec.activation is Activation.RELU:
            return np.maximum(u, 0.0)
        return swish(u)

    def _act_prime(self, u: np.ndarray) -> np.ndarray:
        if self.spec.activation is Activation.RELU:
            return (u > 0.0).astype(np.float64)
        return swish_prime(u)

    # --- forward / backward -------------------------------------------------

    def _forward(self, theta: np.ndarray, X: np.ndarray):
        layers = self.unpack(theta)
        activations, pre = [X], []
        a = X
        for k, (W, b) in enumerate(layers):
            u = a @ W.T + b
            pre.append(u)
            a = u if k == len(layers) - 1 else self._act(u)
            activations.append(a)
        return layers, activations, pre

    def outputs(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        _, activations, _ = self._forward(theta, X)
        return activations[-1][:, 0]

    def output_grads(self, theta, X):
        layers, activations, pre = self._forward(theta, X)
        n = X.shape[0]
        # dz/du for the output layer is 1
        delta = np.ones((n, 1))
        grads: list[np.ndarray] = []
        for k in range(len(layers) - 1, -1, -1):
            W, _ = layers[k]
            a_prev = activations[k]
            dW = delta[:, :, None] * a_prev[:, None, :]
            grads.append(delta)
            grads.append(dW.reshape(n, -1))
            da = delta @ W
            if k > 0:
                delta = da * self._act_prime(pre[k - 1])
        # grads were collected output-first as (db, dW) pairs
        dz_dtheta = np.concatenate(grads[::-1], axis=1)
        return activations[-1][:, 0], dz_dtheta, da

    def _grad_x(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        return self.loss_and_grads(theta, x, y)[2]

    def hess_x(self, theta, x, y):
        theta = np.asarray(theta, dtype=np.float64)
        jac = fd_jacobian(lambda xx: self._grad_x(theta, xx, y), np.asarray(x, dtype=np.float64),
                          self.hess_step)
        return 0.5 * (jac + jac.T)

    def cross_hess(self, theta, x, y):
        x = np.asarray(x, dtype=np.float64)
        return fd_jacobian(lambda th: self._grad_x(th, x, y),
                           np.asarray(theta, dtype=np.float64), self.hess_step)
