"""
Objectives the Langevin inner loop descends, and the minibatch sources that
feed them.

Any objective answers one question: given theta', what are the (estimated)
loss and its gradient? AdversarialObjective answers it the way adversarial
training does: draw a minibatch, attack every example with PGD, optionally
perturb the weights adversarially (AWP), then differentiate the mean loss of
the attacked batch. FunctionObjective wraps an explicit loss for tests and
oracle comparisons.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence

import numpy as np
import structlog

from src.attacks.pgd import adversarial_batch
from src.entropy.awp import awp_perturbation
from src.exceptions import NumericalOverflowError
from src.model_core.base import DifferentiableModel
from src.models import AwpConfig, LabeledDataset, NormBall, PgdConfig

log = structlog.get_logger(__name__)

_SEED_HIGH = 2**63 - 1


# ---------------------------------------------------------------------------
# Minibatch sources
# ---------------------------------------------------------------------------

class BatchSource(ABC):
    """Yields (X, y, batch_id). Deterministic given the generator passed in."""

    @abstractmethod
    def next_batch(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, int]: ...


class RandomBatches(BatchSource):
    """Uniform minibatches drawn without replacement, fresh on every call."""

    def __init__(self, dataset: LabeledDataset, batch_size: int) -> None:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.dataset = dataset
        self.batch_size = min(batch_size, len(dataset))
        self._count = 0

    def next_batch(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, int]:
        idx = rng.choice(len(self.dataset), size=self.batch_size, replace=False)
        self._count += 1
        return self.dataset.inputs[idx], self.dataset.labels[idx], self._count - 1


class CyclicBatches(BatchSource):
    """Walks a fixed list of index arrays in order, wrapping around."""

    def __init__(self, dataset: LabeledDataset, batches: Sequence[np.ndarray], offset: int = 0) -> None:
        if not batches:
            raise ValueError("CyclicBatches needs at least one batch")
        self.dataset = dataset
        self.batches = list(batches)
        self.position = offset

    def next_batch(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, int]:
        batch_id = self.position % len(self.batches)
        idx = self.batches[batch_id]
        self.position += 1
        return self.dataset.inputs[idx], self.dataset.labels[idx], batch_id


# ---------------------------------------------------------------------------
# Robust loss of one batch
# ---------------------------------------------------------------------------

def robust_loss_and_grad(
    model: DifferentiableModel,
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    ball: NormBall,
    pgd: PgdConfig,
    awp: AwpConfig | None = None,
    seeds: Sequence[int | Sequence[int]] | None = None,
    awp_seed: int = 0,
) -> tuple[float, np.ndarray]:
    """Mean adversarial loss of a batch and its parameter gradient.

    The attack is solved at theta; with AWP the gradient is then taken at the
    perturbed weights theta + v on the same attacked inputs.
    """
    theta = np.asarray(theta, dtype=np.float64)
    X_adv = adversarial_batch(model, theta, X, y, ball, pgd, seeds)
    if awp is not None and awp.gamma_a > 0:
        v = awp_perturbation(model, theta, (X, y), ball, pgd, awp, awp_seed, adversarial=X_adv)
        theta = theta + v
    loss, grad = model.mean_loss_and_grad(theta, X_adv, y)
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NumericalOverflowError(f"non-finite robust loss {loss!r} on a batch of {len(y)}")
    return loss, grad


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------

class LangevinObjective(ABC):
    """Loss estimate at theta' for one Langevin step."""

    last_batch_id: int | None = None

    @abstractmethod
    def loss_and_grad(self, theta_prime: np.ndarray, rng: np.random.Generator) -> tuple[float, np.ndarray]: ...


class FunctionObjective(LangevinObjective):
    def __init__(self, fn: Callable[[np.ndarray], tuple[float, np.ndarray]]) -> None:
        self.fn = fn

    def loss_and_grad(self, theta_prime: np.ndarray, rng: np.random.Generator) -> tuple[float, np.ndarray]:
        loss, grad = self.fn(theta_prime)
        return float(loss), np.asarray(grad, dtype=np.float64)


class AdversarialObjective(LangevinObjective):
    """Minibatch adversarial loss of a model, attacked with PGD at theta'."""

    def __init__(
        self,
        model: DifferentiableModel,
        source: BatchSource,
        ball: NormBall,
        pgd: PgdConfig,
        awp: AwpConfig | None = None,
    ) -> None:
        self.model = model
        self.source = source
        self.ball = ball
        self.pgd = pgd
        self.awp = awp

    def loss_and_grad(self, theta_prime: np.ndarray, rng: np.random.Generator) -> tuple[float, np.ndarray]:
        X, y, batch_id = self.source.next_batch(rng)
        self.last_batch_id = batch_id
        keys = rng.integers(0, _SEED_HIGH, size=len(y))
        awp_seed = int(rng.integers(0, _SEED_HIGH))
        return robust_loss_and_grad(
            self.model, theta_prime, X, y, self.ball, self.pgd, self.awp,
            seeds=[int(k) for k in keys], awp_seed=awp_seed,
        )
