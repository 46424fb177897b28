"""
Acceptance: desk-scale adversarial training on the synthetic dataset.

Every optimizer (sgd, ensgd, ensgd2), with and without AWP, must finish 50
epochs and end with a train robust loss at most half of its epoch-1 value.
Runs are deterministic: the same config gives the same metric stream.
"""

from __future__ import annotations

import numpy as np
import pytest

from src.models import OptimizerKind
from src.training.harness import adversarial_train
from src.verification.checks import desk_config

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("awp", [False, True], ids=["plain", "awp"])
@pytest.mark.parametrize("optimizer", list(OptimizerKind), ids=lambda o: o.value)
def test_desk_run_halves_robust_loss(optimizer, awp):
    run = adversarial_train(desk_config(optimizer, awp))
    assert run.completed
    assert len(run.records) == 50
    ratio = run.records[-1].train_robust_loss / run.records[0].train_robust_loss
    assert ratio <= 0.5


def test_desk_run_is_deterministic():
    config = desk_config(OptimizerKind.ENSGD2, awp=True, epochs=5)
    first, second = adversarial_train(config), adversarial_train(config)
    assert [r.model_dump(exclude={"wall_time"}) for r in first.records] == [
        r.model_dump(exclude={"wall_time"}) for r in second.records
    ]
    assert np.array_equal(first.final_theta, second.final_theta)
