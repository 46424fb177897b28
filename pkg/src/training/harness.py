"""
Desk-scale adversarial training.

One epoch shuffles the training set into ceil(n / batch_size) minibatches
and then, depending on the optimizer:

    sgd            one heavy-ball step per minibatch on the PGD-attacked
                   batch gradient (optionally at AWP-perturbed weights)
    ensgd/ensgd2   max(1, round(n_batches / L)) outer steps; each runs L
                   Langevin iterations over the next minibatches and moves
                   theta toward the Langevin mean (first- or second-order)

The learning-rate schedule scales both the SGD learning rate and EnSGD's
outer step eta. All randomness derives from SeedSequence keys built from the
master seed, so identical configs give identical metric streams (wall times
aside).

After every epoch the run measures robust loss/accuracy on train (training
attack) and robust/clean accuracy on test (evaluation attack). The best
checkpoint maximizes the early-stopping metric, earliest epoch on ties. A
non-finite loss ends the run with an AbortRecord instead of raising.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable

import numpy as np
import structlog

from src.entropy.objectives import AdversarialObjective, CyclicBatches, robust_loss_and_grad
from src.entropy.sgld import sgld_estimate
from src.entropy.updates import ensgd_step, sgd_step
from src.exceptions import ConfigError, NumericalOverflowError
from src.model_core.base import DifferentiableModel
from src.model_core.factory import make_model
from src.models import (
    AbortRecord,
    Checkpoint,
    EnsgdConfig,
    EpochRecord,
    ExperimentConfig,
    OptimizerKind,
    TrainingRun,
    UpdateOrder,
)
from src.training.dataset import make_synthetic_dataset
from src.training.evaluate import clean_accuracy, robust_metrics
from src.training.persistence import config_hash

log = structlog.get_logger(__name__)

EpochCallback = Callable[[EpochRecord], None]


class _Abort(Exception):
    def __init__(self, batch_id: int, message: str) -> None:
        super().__init__(message)
        self.batch_id = batch_id


def ensgd_config_for(config: ExperimentConfig) -> EnsgdConfig:
    order = UpdateOrder.SECOND if config.optimizer is OptimizerKind.ENSGD2 else UpdateOrder.FIRST
    return config.ensgd.model_copy(update={"order": order})


class Trainer:
    """Holds the model, data and optimizer state of one run."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.model: DifferentiableModel = make_model(config.model, config.init_seed)
        self.train, self.test = make_synthetic_dataset(
            config.dataset.n, config.dataset.d, config.dataset.seed
        )
        if self.train.input_dim != self.model.input_dim:
            raise ConfigError(
                f"dataset.d = {self.train.input_dim} does not match model.input_dim = {self.model.input_dim}"
            )
        self.theta = self.model.theta0.copy()
        self.buffer = np.zeros_like(self.theta)
        self.n_batches = math.ceil(len(self.train) / config.batch_size)
        self.ensgd = ensgd_config_for(config)

    def _batches(self, epoch: int) -> list[np.ndarray]:
        rng = np.random.default_rng(np.random.SeedSequence([self.config.seed, epoch]))
        return np.array_split(rng.permutation(len(self.train)), self.n_batches)

    def _sgd_epoch(self, epoch: int, lr: float) -> tuple[int, int]:
        cfg = self.config
        for b, idx in enumerate(self._batches(epoch)):
            seeds = [(cfg.seed, epoch, b, int(i)) for i in idx]
            try:
                _, grad = robust_loss_and_grad(
                    self.model, self.theta, self.train.inputs[idx], self.train.labels[idx],
                    cfg.ball, cfg.pgd_train, cfg.awp, seeds=seeds, awp_seed=b,
                )
            except NumericalOverflowError as exc:
                raise _Abort(b, str(exc)) from exc
            self.theta, self.buffer = sgd_step(
                self.theta, grad, self.buffer, lr, cfg.momentum, cfg.weight_decay
            )
            if not np.all(np.isfinite(self.theta)):
                raise _Abort(b, "parameters became non-finite after an SGD step")
        return self.n_batches, self.n_batches

    def _ensgd_epoch(self, epoch: int, factor: float) -> tuple[int, int]:
        cfg = self.config
        outer = max(1, round(self.n_batches / self.ensgd.langevin_iters))
        source = CyclicBatches(self.train, self._batches(epoch))
        objective = AdversarialObjective(self.model, source, cfg.ball, cfg.pgd_train, cfg.awp)
        eta = self.ensgd.eta * factor
        for k in range(outer):
            try:
                state = sgld_estimate(
                    objective, self.theta, self.ensgd, seed=np.random.SeedSequence([cfg.seed, epoch, k])
                )
            except NumericalOverflowError as exc:
                raise _Abort(objective.last_batch_id or 0, str(exc)) from exc
            self.theta = ensgd_step(self.theta, state, self.ensgd, eta)
            if not np.all(np.isfinite(self.theta)):
                raise _Abort(objective.last_batch_id or 0, "parameters became non-finite after an EnSGD step")
        return outer, outer * self.ensgd.langevin_iters

    def run_epoch(self, epoch: int) -> EpochRecord:
        cfg = self.config
        started = time.perf_counter()
        factor = cfg.lr_schedule.factor(epoch)
        lr = cfg.lr_schedule.initial * factor
        if cfg.optimizer is OptimizerKind.SGD:
            outer, minibatches = self._sgd_epoch(epoch, lr)
        else:
            outer, minibatches = self._ensgd_epoch(epoch, factor)

        try:
            train_loss, train_acc = robust_metrics(self.model, self.theta, self.train, cfg.ball, cfg.pgd_train)
            _, test_acc = robust_metrics(self.model, self.theta, self.test, cfg.ball, cfg.pgd_eval)
        except NumericalOverflowError as exc:
            raise _Abort(-1, str(exc)) from exc
        if not math.isfinite(train_loss):
            raise _Abort(-1, f"non-finite train robust loss {train_loss!r}")
        return EpochRecord(
            epoch=epoch,
            lr=lr if cfg.optimizer is OptimizerKind.SGD else self.ensgd.eta * factor,
            train_robust_loss=train_loss,
            train_robust_accuracy=train_acc,
            test_robust_accuracy=test_acc,
            test_clean_accuracy=clean_accuracy(self.model, self.theta, self.test),
            wall_time=time.perf_counter() - started,
            outer_steps=outer,
            minibatches=minibatches,
        )


def adversarial_train(
    config: ExperimentConfig, on_epoch: EpochCallback | None = None
) -> TrainingRun:
    trainer = Trainer(config)
    digest = config_hash(config)
    log.info(
        "training_started",
        name=config.name,
        optimizer=config.optimizer.value,
        awp=config.awp is not None,
        epochs=config.epochs,
        params=trainer.model.param_dim,
    )

    records: list[EpochRecord] = []
    best: Checkpoint | None = None
    best_score = -math.inf
    aborted: AbortRecord | None = None
    for epoch in range(1, config.epochs + 1):
        try:
            record = trainer.run_epoch(epoch)
        except _Abort as exc:
            aborted = AbortRecord(epoch=epoch, batch_id=exc.batch_id, theta=trainer.theta.copy(), message=str(exc))
            log.error("training_aborted", epoch=epoch, batch_id=exc.batch_id, error=str(exc))
            break
        records.append(record)
        if on_epoch is not None:
            on_epoch(record)
        score = getattr(record, config.early_stopping.value)
        if score > best_score:
            best_score = score
            best = Checkpoint(theta=trainer.theta.copy(), epoch=epoch, config_hash=digest)
        log.info(
            "epoch_completed",
            epoch=epoch,
            lr=record.lr,
            train_robust_loss=round(record.train_robust_loss, 6),
            test_robust_accuracy=record.test_robust_accuracy,
        )

    return TrainingRun(
        config=config,
        records=records,
        best=best,
        final_theta=trainer.theta.copy(),
        aborted=aborted,
    )

