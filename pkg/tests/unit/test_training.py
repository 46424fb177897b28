"""
Unit tests for the training harness on tiny configurations: data splits,
metrics, schedules, determinism, early stopping, aborts and run artifacts.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from src.exceptions import ConfigError
from src.models import (
    AwpConfig,
    DatasetSpec,
    EnsgdConfig,
    ExperimentConfig,
    LrSchedule,
    ModelKind,
    ModelSpec,
    Norm,
    NormBall,
    OptimizerKind,
    PgdConfig,
)
from src.training.dataset import make_synthetic_dataset
from src.training.evaluate import clean_accuracy, evaluate_robust_accuracy, robust_metrics
from src.training.harness import Trainer, adversarial_train, ensgd_config_for
from src.training.persistence import MetricsWriter, config_hash, file_sha256, write_manifest


def tiny_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig(
        name="tiny",
        dataset=DatasetSpec(n=40, d=2, seed=0),
        model=ModelSpec(kind=ModelKind.MLP, input_dim=2, hidden=[4]),
        pgd_train=PgdConfig(steps=3, step_size=0.0125),
        pgd_eval=PgdConfig(steps=5, step_size=0.0125),
        epochs=2,
        batch_size=20,
    )
    return base.model_copy(update=overrides)


def without_wall_time(run) -> list[dict]:
    return [r.model_dump(exclude={"wall_time"}) for r in run.records]


# ---------------------------------------------------------------------------
# Data and metrics
# ---------------------------------------------------------------------------


def test_synthetic_splits_are_disjoint_and_labelled_by_first_coordinate():
    train, test = make_synthetic_dataset(50, 3, seed=2)
    assert len(train) == len(test) == 50
    assert train.input_dim == 3
    assert np.array_equal(train.labels, np.sign(train.inputs[:, 0]))
    assert not np.isin(train.inputs[:, 0], test.inputs[:, 0]).any()
    again, _ = make_synthetic_dataset(50, 3, seed=2)
    assert np.array_equal(again.inputs, train.inputs)


def test_synthetic_dataset_validates_sizes():
    with pytest.raises(ValueError):
        make_synthetic_dataset(1)
    with pytest.raises(ValueError):
        make_synthetic_dataset(10, d=0)


def test_first_coordinate_classifier_is_perfect_when_clean(linear_model, synthetic_data):
    _, test = synthetic_data
    theta = np.array([1.0, 0.0])
    assert clean_accuracy(linear_model, theta, test) == 1.0
    loss, acc = robust_metrics(linear_model, theta, test, NormBall(epsilon=0.0), PgdConfig())
    assert acc == 1.0
    assert loss == pytest.approx(float(linear_model.loss_batch(theta, test.inputs, test.labels).mean()))


def test_attack_lowers_accuracy(linear_model, synthetic_data):
    _, test = synthetic_data
    theta = np.array([1.0, 0.0])
    ball = NormBall(p=Norm.LINF, epsilon=0.5)
    robust = evaluate_robust_accuracy(linear_model, theta, test, ball, PgdConfig(steps=5, step_size=0.25))
    # exactly the points with |x_1| > 0.5 survive
    assert robust == pytest.approx(float(np.mean(np.abs(test.inputs[:, 0]) > 0.5)))


def test_lr_schedule_steps_down_after_milestones():
    schedule = LrSchedule(initial=0.1, decay=0.1, milestones=[30, 40])
    assert schedule.lr_at(30) == pytest.approx(0.1)
    assert schedule.lr_at(31) == pytest.approx(0.01)
    assert schedule.lr_at(41) == pytest.approx(0.001)
    with pytest.raises(ValueError):
        LrSchedule(milestones=[40, 30])


# ---------------------------------------------------------------------------
# Harness
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("optimizer", list(OptimizerKind))
def test_training_is_deterministic(optimizer):
    cfg = tiny_config(optimizer=optimizer, ensgd=EnsgdConfig(langevin_iters=1, eta=1.0))
    first, second = adversarial_train(cfg), adversarial_train(cfg)
    assert first.completed
    assert len(first.records) == 2
    assert without_wall_time(first) == without_wall_time(second)
    assert np.array_equal(first.final_theta, second.final_theta)


def test_ensgd_counts_outer_steps_and_minibatches():
    cfg = tiny_config(optimizer=OptimizerKind.ENSGD, ensgd=EnsgdConfig(langevin_iters=2), epochs=1)
    record = adversarial_train(cfg).records[0]
    # two minibatches per epoch, two Langevin iterations per outer step
    assert record.outer_steps == 1
    assert record.minibatches == 2
    assert record.lr == pytest.approx(cfg.ensgd.eta)


def test_sgd_with_awp_runs_one_step_per_batch():
    run = adversarial_train(tiny_config(awp=AwpConfig(gamma_a=0.01), epochs=1))
    assert run.records[0].outer_steps == 2
    assert run.records[0].minibatches == 2


def test_best_checkpoint_tracks_early_stopping_metric():
    run = adversarial_train(tiny_config(epochs=3))
    scores = [r.test_robust_accuracy for r in run.records]
    assert run.best is not None
    # earliest epoch wins ties
    assert run.best.epoch == scores.index(max(scores)) + 1
    assert run.best.config_hash == config_hash(run.config)


def test_second_order_variant_switches_update_order():
    assert ensgd_config_for(tiny_config(optimizer=OptimizerKind.ENSGD2)).order.value == "second"
    assert ensgd_config_for(tiny_config(optimizer=OptimizerKind.ENSGD)).order.value == "first"


def test_overflowing_run_is_aborted_not_raised():
    cfg = tiny_config(model=ModelSpec(kind=ModelKind.LINEAR_LOGISTIC), lr_schedule=LrSchedule(initial=1e300))
    run = adversarial_train(cfg)
    assert not run.completed
    assert run.aborted.epoch == 1
    assert run.records == []
    assert run.best is None


def test_dimension_mismatch_is_a_config_error():
    with pytest.raises(ConfigError):
        Trainer(tiny_config(dataset=DatasetSpec(n=10, d=3)))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def test_config_hash_is_canonical():
    assert config_hash({"b": 1, "a": 2}) == config_hash({"a": 2, "b": 1})
    assert config_hash(tiny_config()) != config_hash(tiny_config(seed=1))


def test_metrics_writer_appends_json_lines(tmp_path):
    writer = MetricsWriter(tmp_path / "run" / "metrics.jsonl")
    run = adversarial_train(tiny_config(epochs=2), on_epoch=writer)
    lines = writer.path.read_text().splitlines()
    assert [json.loads(line)["epoch"] for line in lines] == [1, 2]
    assert json.loads(lines[-1])["train_robust_loss"] == pytest.approx(run.records[-1].train_robust_loss)


def test_manifest_hashes_artifacts(tmp_path):
    artifact = tmp_path / "a.json"
    artifact.write_text("{}")
    path = write_manifest(tmp_path, "train", tiny_config(), {"seed": 0}, [artifact], status="ok")
    manifest = json.loads(path.read_text())
    assert manifest["artifacts"] == {"a.json": file_sha256(artifact)}
    assert manifest["config_sha256"] == config_hash(tiny_config())
    assert manifest["status"] == "ok"
    assert manifest["config"]["name"] == "tiny"
