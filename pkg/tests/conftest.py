"""
Pytest shared fixtures for unit and evaluation tests.

Provides:
  - fig_point / fig_dataset: the single example x = (-1, 1), y = +1 of the
    two-parameter surface plots, with radius 0.6
  - linear_model / swish_model / mlp_model: seeded toy models
  - l2_ball / linf_ball: the radius-0.6 balls around fig_point
  - synthetic_data: the n = 200 train/test split of the desk experiments
  - quadratic_loss: batched (1/2)||theta'||^2 for local-entropy oracles
"""

from __future__ import annotations

import numpy as np
import pytest

from src.model_core.factory import make_model
from src.models import LabeledDataset, ModelKind, ModelSpec, Norm, NormBall
from src.training.dataset import make_synthetic_dataset

FIG_X = np.array([-1.0, 1.0])
FIG_Y = 1.0
FIG_EPS = 0.6


@pytest.fixture
def fig_point() -> tuple[np.ndarray, float]:
    return FIG_X.copy(), FIG_Y


@pytest.fixture
def fig_dataset() -> LabeledDataset:
    return LabeledDataset(inputs=FIG_X[None, :], labels=[FIG_Y])


@pytest.fixture
def linear_model():
    return make_model(ModelSpec(kind=ModelKind.LINEAR_LOGISTIC, input_dim=2))


@pytest.fixture
def swish_model():
    return make_model(ModelSpec(kind=ModelKind.SWISH_LOGISTIC, input_dim=2))


@pytest.fixture
def mlp_model():
    return make_model(ModelSpec(kind=ModelKind.MLP, input_dim=2, hidden=[3]), init_seed=1)


@pytest.fixture
def l2_ball() -> NormBall:
    return NormBall(p=Norm.L2, epsilon=FIG_EPS)


@pytest.fixture
def linf_ball() -> NormBall:
    return NormBall(p=Norm.LINF, epsilon=FIG_EPS)


@pytest.fixture
def synthetic_data() -> tuple[LabeledDataset, LabeledDataset]:
    return make_synthetic_dataset(200, 2, seed=0)


@pytest.fixture
def quadratic_loss():
    def loss(nodes: np.ndarray) -> np.ndarray:
        return 0.5 * np.sum(np.atleast_2d(nodes) ** 2, axis=1)
    return loss
