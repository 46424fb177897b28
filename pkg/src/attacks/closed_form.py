"""
Exact attacks on the linear logistic model.

For z = theta^T x the loss log(1 + exp(-y theta^T (x + delta))) is maximized
by pushing theta^T delta as far against y as the ball allows:

    p = 2   : delta = -y * eps * theta / ||theta||_2
    p = inf : delta = -y * eps * sign(theta)

and the optimal adversarial loss is the clean loss with the logit shifted by
the dual norm, log(1 + exp(-y theta^T x + eps * ||theta||_q)).

The maximizer is undefined where theta (p=2) or a coordinate theta_i (p=inf)
vanishes. Those coordinates get delta = 0 and the result is flagged
degenerate.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from src.model_core.base import logistic_loss
from src.models import AttackResult, Norm, NormBall


def _linear_loss(theta: np.ndarray, x_prime: np.ndarray, y: float) -> float:
    return float(logistic_loss(y * float(theta @ x_prime)))


def exact_l2_attack(theta: np.ndarray, x: np.ndarray, y: float, epsilon: float) -> AttackResult:
    theta = np.asarray(theta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(theta))
    if norm == 0.0:
        delta = np.zeros_like(x)
        degenerate = True
    else:
        delta = -y * epsilon * theta / norm
        degenerate = False
    x_prime = x + delta
    return AttackResult(
        delta=delta,
        x_prime=x_prime,
        achieved_loss=_linear_loss(theta, x_prime, y),
        on_boundary=epsilon > 0 and not degenerate,
        degenerate=degenerate,
    )


def exact_linf_attack(theta: np.ndarray, x: np.ndarray, y: float, epsilon: float) -> AttackResult:
    theta = np.asarray(theta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    # np.sign(0) == 0 leaves zero coordinates unperturbed
    delta = -y * epsilon * np.sign(theta)
    x_prime = x + delta
    return AttackResult(
        delta=delta,
        x_prime=x_prime,
        achieved_loss=_linear_loss(theta, x_prime, y),
        on_boundary=epsilon > 0 and bool(np.any(theta != 0.0)),
        degenerate=bool(np.any(theta == 0.0)),
    )


def exact_attack(theta: np.ndarray, x: np.ndarray, y: float, ball: NormBall) -> AttackResult:
    if ball.p is Norm.L2:
        return exact_l2_attack(theta, x, y, ball.epsilon)
    return exact_linf_attack(theta, x, y, ball.epsilon)


def _dual_norm_and_subgradient(theta: np.ndarray, p: Norm) -> tuple[float, np.ndarray]:
    if p is Norm.L2:
        norm = float(np.linalg.norm(theta))
        # zero subgradient at theta = 0
        return norm, (theta / norm if norm > 0 else np.zeros_like(theta))
    return float(np.abs(theta).sum()), np.sign(theta)


def dual_norm_adv_loss(
    theta: np.ndarray, x: np.ndarray, y: float, epsilon: float, p: Norm
) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    q_norm, _ = _dual_norm_and_subgradient(theta, p)
    return float(logistic_loss(y * float(theta @ np.asarray(x)) - epsilon * q_norm))


def dual_norm_adv_batch(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, ball: NormBall
) -> tuple[np.ndarray, np.ndarray]:
    """Per-example optimal adversarial losses and their theta-gradients.

    The gradient is the clean gradient at the exact attack; where the dual norm
    is not differentiable the zero subgradient of the kink is used.
    """
    theta = np.asarray(theta, dtype=np.float64)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    q_norm, sub = _dual_norm_and_subgradient(theta, ball.p)
    t = y * (X @ theta) - ball.epsilon * q_norm
    losses = logistic_loss(t)
    # d/dtheta log(1 + exp(-t)) = -sigmoid(-t) * dt/dtheta
    dt = y[:, None] * X - ball.epsilon * sub[None, :]
    grads = -expit(-t)[:, None] * dt
    return losses, grads


def dual_norm_adv_mean(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, ball: NormBall
) -> tuple[float, np.ndarray]:
    losses, grads = dual_norm_adv_batch(theta, X, y, ball)
    return float(losses.mean()), grads.mean(axis=0)
