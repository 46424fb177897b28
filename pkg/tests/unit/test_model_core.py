"""
Unit tests for the toy models.

Analytic first and second derivatives are checked against central finite
differences; packing, partitions and factory validation are checked
directly.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.exceptions import ModelSpecError, NumericalOverflowError
from src.finite_diff import fd_gradient, fd_jacobian
from src.model_core.base import logistic_loss
from src.model_core.factory import make_model
from src.model_core.linear import LinearLogistic, swish_prime, swish_stationary_point
from src.model_core.mlp import Mlp
from src.models import Activation, ModelKind, ModelSpec

THETAS = [np.array([1.0, 0.5]), np.array([-0.7, 1.3]), np.array([2.0, -1.5])]


# ---------------------------------------------------------------------------
# Loss values
# ---------------------------------------------------------------------------


def test_logistic_loss_is_stable_for_large_margins():
    values = logistic_loss(np.array([-800.0, 0.0, 800.0]))
    assert values[0] == pytest.approx(800.0)
    assert values[1] == pytest.approx(math.log(2.0))
    assert values[2] == pytest.approx(0.0, abs=1e-300)
    assert np.all(np.isfinite(values))


def test_linear_loss_at_reference_point(linear_model, fig_point):
    x, y = fig_point
    # z = theta^T x = -1 + 0.5
    assert linear_model.loss(np.array([1.0, 0.5]), x, y) == pytest.approx(math.log1p(math.exp(0.5)))


def test_loss_batch_matches_single_losses(mlp_model):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 2))
    y = np.array([1.0, -1.0, 1.0, 1.0, -1.0])
    theta = mlp_model.theta0
    batch = mlp_model.loss_batch(theta, X, y)
    singles = [mlp_model.loss(theta, X[i], y[i]) for i in range(5)]
    assert batch == pytest.approx(singles, rel=1e-12)


def test_non_finite_parameters_raise(linear_model, fig_point):
    x, y = fig_point
    with pytest.raises(NumericalOverflowError):
        linear_model.loss_and_grads(np.array([np.nan, 1.0]), x, y)


# ---------------------------------------------------------------------------
# First derivatives
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("model_name", ["linear_model", "swish_model", "mlp_model"])
def test_gradients_match_finite_differences(model_name, request, fig_point):
    model = request.getfixturevalue(model_name)
    x, y = fig_point
    rng = np.random.default_rng(3)
    theta = rng.uniform(-1.5, 1.5, size=model.param_dim)
    _, grad_theta, grad_x = model.loss_and_grads(theta, x, y)
    fd_theta = fd_gradient(lambda t: model.loss(t, x, y), theta)
    fd_x = fd_gradient(lambda xx: model.loss(theta, xx, y), x)
    assert grad_theta == pytest.approx(fd_theta, abs=1e-7)
    assert grad_x == pytest.approx(fd_x, abs=1e-7)


def test_mean_loss_and_grad_averages_rows(linear_model):
    X = np.array([[1.0, 0.0], [0.0, 2.0]])
    y = np.array([1.0, -1.0])
    theta = np.array([0.3, -0.4])
    mean, grad = linear_model.mean_loss_and_grad(theta, X, y)
    losses, grads, _ = linear_model.batch_grads(theta, X, y)
    assert mean == pytest.approx(losses.mean())
    assert grad == pytest.approx(grads.mean(axis=0))


def test_predict_counts_zero_output_as_no_class(linear_model):
    preds = linear_model.predict(np.array([1.0, 0.0]), np.array([[0.0, 3.0], [2.0, 0.0]]))
    assert preds.tolist() == [0.0, 1.0]


# ---------------------------------------------------------------------------
# Second derivatives
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("model_name", ["linear_model", "swish_model"])
@pytest.mark.parametrize("theta", THETAS)
def test_closed_form_hessians_match_finite_differences(model_name, theta, request, fig_point):
    model = request.getfixturevalue(model_name)
    x, y = fig_point
    fd_hx = fd_jacobian(lambda xx: model.loss_and_grads(theta, xx, y)[2], x)
    fd_cross = fd_jacobian(lambda t: model.loss_and_grads(t, x, y)[2], theta)
    assert model.hess_x(theta, x, y) == pytest.approx(fd_hx, abs=1e-7)
    assert model.cross_hess(theta, x, y) == pytest.approx(fd_cross, abs=1e-7)


def test_mlp_cross_hessian_is_mixed_partial(mlp_model, fig_point):
    x, y = fig_point
    theta = mlp_model.theta0.copy()
    # d/dx of grad_theta, transposed, is the same mixed partial
    other_way = fd_jacobian(lambda xx: mlp_model.loss_and_grads(theta, xx, y)[1], x).T
    assert mlp_model.cross_hess(theta, x, y) == pytest.approx(other_way, abs=1e-6)


def test_mlp_input_hessian_is_symmetric(mlp_model, fig_point):
    x, y = fig_point
    hess = mlp_model.hess_x(mlp_model.theta0, x, y)
    assert hess == pytest.approx(hess.T)


def test_swish_stationary_point():
    u = swish_stationary_point()
    assert u == pytest.approx(-1.2784645, abs=1e-6)
    assert float(swish_prime(u)) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Packing, partitions and the factory
# ---------------------------------------------------------------------------


def test_mlp_param_count_and_blocks():
    model = make_model(ModelSpec(kind=ModelKind.MLP, input_dim=2, hidden=[3]))
    assert isinstance(model, Mlp)
    # W1 (3x2) + b1 (3) + W2 (1x3) + b2 (1)
    assert model.param_dim == 13
    assert [(b.start, b.stop) for b in model.layer_blocks()] == [(0, 6), (6, 9), (9, 12), (12, 13)]


def test_filter_blocks_partition_theta():
    model = make_model(ModelSpec(kind=ModelKind.MLP, input_dim=2, hidden=[3, 2]))
    covered = np.zeros(model.param_dim, dtype=int)
    for block in model.filter_blocks():
        covered[block] += 1
    assert np.all(covered == 1)
    # 3 + 2 + 1 filters plus 3 bias vectors
    assert len(model.filter_blocks()) == 9


def test_factory_is_seeded():
    spec = ModelSpec(kind=ModelKind.MLP, input_dim=2, hidden=[4], activation=Activation.RELU)
    assert np.array_equal(make_model(spec, 7).theta0, make_model(spec, 7).theta0)
    assert not np.array_equal(make_model(spec, 7).theta0, make_model(spec, 8).theta0)


def test_theta0_is_read_only(linear_model):
    assert isinstance(linear_model, LinearLogistic)
    with pytest.raises(ValueError):
        linear_model.theta0[0] = 1.0


@pytest.mark.parametrize(
    "spec",
    [
        ModelSpec(kind=ModelKind.LINEAR_LOGISTIC, hidden=[2]),
        ModelSpec(kind=ModelKind.MLP, hidden=[0]),
        ModelSpec(kind=ModelKind.SWISH_LOGISTIC, input_dim=0),
    ],
)
def test_factory_rejects_bad_specs(spec):
    with pytest.raises(ModelSpecError):
        make_model(spec)
