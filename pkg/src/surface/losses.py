"""
Dataset-average losses over many parameter vectors at once.

A surface loss maps a (k, m) stack of parameter rows to the k mean losses
over a fixed dataset, which is the shape both grid sampling and the
local-entropy quadrature consume.

    clean            mean_i l(x_i, y_i, theta)
    adv_*            closed-form dual-norm loss (linear model only)
    adv_*_pgd        PGD re-solved at every theta with one fixed seed
"""

from __future__ import annotations

import numpy as np
import structlog

from src.attacks.pgd import pgd_batch
from src.concurrency import ordered_map
from src.config import settings
from src.exceptions import UnsupportedCombinationError
from src.model_core.base import DifferentiableModel, logistic_loss
from src.model_core.linear import LinearLogistic
from src.models import LossVariant, Norm, NormBall, PgdConfig

log = structlog.get_logger(__name__)


def default_surface_pgd(epsilon: float, seed: int = 0) -> PgdConfig:
    """Surface attacks: settings.surface_pgd_steps steps of size fraction * eps, no random start."""
    step = settings.surface_pgd_step_fraction * epsilon if epsilon > 0 else 1.0
    return PgdConfig(steps=settings.surface_pgd_steps, step_size=step, random_init=False, seed=seed)


class SurfaceLoss:
    """Callable (k, m) -> (k,) mean loss of *variant* over (X, y)."""

    def __init__(
        self,
        model: DifferentiableModel,
        X: np.ndarray,
        y: np.ndarray,
        variant: LossVariant,
        epsilon: float = 0.0,
        pgd: PgdConfig | None = None,
        workers: int | None = None,
    ) -> None:
        self.model = model
        self.X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        self.variant = variant
        norm = variant.norm
        self.ball = NormBall(p=norm or Norm.LINF, epsilon=epsilon if norm is not None else 0.0)
        self.pgd = pgd or default_surface_pgd(epsilon)
        self.workers = workers
        closed_form = norm is not None and not variant.uses_pgd
        if closed_form and not isinstance(model, LinearLogistic):
            raise UnsupportedCombinationError(
                f"closed-form {variant.value} needs a linear_logistic model, got {model!r}"
            )

    def _linear(self, thetas: np.ndarray) -> np.ndarray:
        if self.variant.norm is None:
            shift = np.zeros(len(thetas))
        elif self.ball.p is Norm.L2:
            shift = self.ball.epsilon * np.linalg.norm(thetas, axis=1)
        else:
            shift = self.ball.epsilon * np.abs(thetas).sum(axis=1)
        t = self.y[None, :] * (thetas @ self.X.T) - shift[:, None]
        return logistic_loss(t).mean(axis=1)

    def _pgd(self, theta: np.ndarray) -> float:
        _, losses, _ = pgd_batch(self.model, theta, self.X, self.y, self.ball, self.pgd)
        return float(losses.mean())

    def _clean(self, theta: np.ndarray) -> float:
        return float(self.model.loss_batch(theta, self.X, self.y).mean())

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
        if isinstance(self.model, LinearLogistic) and not self.variant.uses_pgd:
            return self._linear(thetas)
        fn = self._pgd if self.variant.uses_pgd else self._clean
        return np.array(ordered_map(fn, list(thetas), self.workers), dtype=np.float64)

    def metadata(self) -> dict:
        meta = {"variant": self.variant.value, "epsilon": self.ball.epsilon, "examples": len(self.y)}
        if self.variant.uses_pgd:
            meta["pgd"] = self.pgd.model_dump()
        return meta
