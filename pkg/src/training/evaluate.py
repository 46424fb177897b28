"""
Accuracy and robust loss of a parameter vector on a dataset.

A prediction is correct when sign(model output) equals the label; an exact
zero output counts as wrong. Robust metrics attack every example with PGD
using the default per-example seeds (pgd.seed, i), so they are deterministic.
"""

from __future__ import annotations

import numpy as np

from src.attacks.pgd import pgd_batch
from src.model_core.base import DifferentiableModel
from src.models import LabeledDataset, NormBall, PgdConfig


def clean_accuracy(model: DifferentiableModel, theta: np.ndarray, dataset: LabeledDataset) -> float:
    return float(np.mean(model.predict(theta, dataset.inputs) == dataset.labels))


def robust_metrics(
    model: DifferentiableModel,
    theta: np.ndarray,
    dataset: LabeledDataset,
    ball: NormBall,
    pgd: PgdConfig,
) -> tuple[float, float]:
    """(mean robust loss, robust accuracy) under one PGD attack of every example."""
    deltas, losses, _ = pgd_batch(model, theta, dataset.inputs, dataset.labels, ball, pgd)
    predictions = model.predict(theta, dataset.inputs + deltas)
    return float(losses.mean()), float(np.mean(predictions == dataset.labels))


def evaluate_robust_accuracy(
    model: DifferentiableModel,
    theta: np.ndarray,
    dataset: LabeledDataset,
    ball: NormBall,
    pgd: PgdConfig,
) -> float:
    return robust_metrics(model, theta, dataset, ball, pgd)[1]
