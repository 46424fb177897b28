"""
Unit tests for the local-entropy machinery: quadrature against the
closed-form Gaussian case, the Langevin mean estimate, the outer updates,
AWP and the minibatch objectives.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.attacks.closed_form import dual_norm_adv_mean
from src.attacks.pgd import adversarial_batch
from src.entropy.awp import awp_perturbation
from src.entropy.objectives import (
    AdversarialObjective,
    CyclicBatches,
    FunctionObjective,
    RandomBatches,
    robust_loss_and_grad,
)
from src.entropy.quadrature import GibbsQuadrature, as_batch_loss, local_entropy_exact
from src.entropy.sgld import sgld_estimate
from src.entropy.updates import ensgd_step, second_order_scale, sgd_step
from src.exceptions import UnsupportedDimensionError
from src.finite_diff import fd_gradient, fd_jacobian
from src.models import (
    AwpConfig,
    EnsgdConfig,
    EnsgdState,
    LabeledDataset,
    Norm,
    NormBall,
    PgdConfig,
    QuadratureRule,
    QuadratureSpec,
    UpdateOrder,
)

THETA = np.array([0.5, -1.0])


def gaussian_entropy(theta: np.ndarray, gamma: float) -> float:
    """-F for L = ||t||^2 / 2: a Gaussian integral in closed form."""
    d = theta.size
    return gamma * float(theta @ theta) / (2 * (1 + gamma)) - 0.5 * d * math.log(2 * math.pi / (1 + gamma))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("rule", [QuadratureRule.MIDPOINT, QuadratureRule.GAUSS_LEGENDRE])
def test_gaussian_local_entropy_matches_closed_form(quadratic_loss, rule):
    gamma = 1.0
    ev = local_entropy_exact(quadratic_loss, THETA, gamma, QuadratureSpec(rule=rule))
    assert ev.value == pytest.approx(gaussian_entropy(THETA, gamma), abs=1e-6)
    assert ev.gradient == pytest.approx(gamma * THETA / (1 + gamma), abs=1e-6)
    assert ev.hessian == pytest.approx(gamma / (1 + gamma) * np.eye(2), abs=1e-6)
    assert ev.mean == pytest.approx(gamma * THETA / (1 + gamma), abs=1e-6)


def test_quadrature_gradient_matches_finite_differences(quadratic_loss):
    quad = GibbsQuadrature(quadratic_loss, 0.5, THETA)
    assert quad.gradient(THETA) == pytest.approx(fd_gradient(quad.value, THETA), abs=1e-6)
    hess = quad.evaluate(THETA).hessian
    assert hess == pytest.approx(fd_jacobian(quad.gradient, THETA), abs=1e-5)


def test_unrequested_pieces_stay_empty(quadratic_loss):
    ev = local_entropy_exact(quadratic_loss, THETA, 1.0, want=("gradient",))
    assert ev.value is None and ev.hessian is None
    assert ev.gradient is not None


def test_scalar_loss_lifts_to_batches():
    batched = as_batch_loss(lambda t: float(t @ t))
    assert batched(np.array([[1.0, 2.0], [0.0, 3.0]])) == pytest.approx([5.0, 9.0])


def test_widened_box_keeps_node_spacing(quadratic_loss):
    base = GibbsQuadrature(quadratic_loss, 1.0, np.zeros(2))
    wide = GibbsQuadrature(quadratic_loss, 1.0, np.zeros(2), extent=6.0)
    assert wide.half == pytest.approx(12.0)
    assert wide.points_per_axis == 2 * base.points_per_axis
    assert wide.value(THETA) == pytest.approx(base.value(THETA), abs=1e-8)


def test_quadrature_rejects_bad_inputs(quadratic_loss):
    with pytest.raises(UnsupportedDimensionError):
        GibbsQuadrature(quadratic_loss, 1.0, np.zeros(4))
    with pytest.raises(ValueError):
        GibbsQuadrature(quadratic_loss, 0.0, np.zeros(2))
    with pytest.raises(ValueError):
        QuadratureSpec(rule=QuadratureRule.GAUSS_LEGENDRE, points_per_axis=20, panel_order=8)


# ---------------------------------------------------------------------------
# Langevin estimate and outer updates
# ---------------------------------------------------------------------------


def quadratic_objective() -> FunctionObjective:
    return FunctionObjective(lambda t: (0.5 * float(t @ t), t.copy()))


def test_noiseless_langevin_mean_is_gibbs_mean():
    cfg = EnsgdConfig(gamma=1.0, eta_prime=0.5, eps_langevin=0.0, langevin_iters=30)
    state = sgld_estimate(quadratic_objective(), THETA, cfg)
    # fixed point of t + gamma (t - theta) = 0
    assert state.theta_bar == pytest.approx(THETA / 2, abs=1e-12)
    assert state.variance() == pytest.approx([0.0, 0.0], abs=1e-12)
    assert state.minibatches == 30


def test_langevin_on_flat_loss_stays_put():
    cfg = EnsgdConfig(gamma=0.03, eta_prime=0.1, eps_langevin=0.0, langevin_iters=25)
    flat = FunctionObjective(lambda t: (0.0, np.zeros_like(t)))
    state = sgld_estimate(flat, THETA, cfg)
    assert state.theta_bar == pytest.approx(THETA, abs=1e-15)


def test_langevin_noise_is_seeded():
    cfg = EnsgdConfig(gamma=1.0, eta_prime=0.1, eps_langevin=0.5)
    a = sgld_estimate(quadratic_objective(), THETA, cfg, seed=4)
    b = sgld_estimate(quadratic_objective(), THETA, cfg, seed=4)
    c = sgld_estimate(quadratic_objective(), THETA, cfg, seed=5)
    assert np.array_equal(a.theta_bar, b.theta_bar)
    assert not np.array_equal(a.theta_bar, c.theta_bar)


def test_first_order_step_moves_toward_mean():
    cfg = EnsgdConfig(gamma=0.5, eta=0.4)
    state = EnsgdState(theta_bar=np.zeros(2), xi_bar=np.zeros(2))
    assert ensgd_step(THETA, state, cfg) == pytest.approx(THETA * (1 - 0.2))
    assert ensgd_step(THETA, state, cfg, eta=2.0) == pytest.approx(np.zeros(2))


def test_second_order_scale_uses_clamped_variance():
    cfg = EnsgdConfig(gamma=0.5, order=UpdateOrder.SECOND, variance_floor=0.01)
    state = EnsgdState(theta_bar=np.zeros(2), xi_bar=np.array([1.0, 100.0]))
    scale = second_order_scale(state, cfg)
    assert scale[0] == pytest.approx(1.0 / (0.5 - 0.25))
    assert scale[1] == pytest.approx(1.0 / (0.5 * 0.01))
    step = ensgd_step(THETA, EnsgdState(theta_bar=THETA - 1.0, xi_bar=state.xi_bar + (THETA - 1.0) ** 2), cfg)
    assert np.all(np.isfinite(step))


def test_free_gaussian_variance_hits_the_clamp():
    cfg = EnsgdConfig(gamma=0.5, order=UpdateOrder.SECOND)
    # var = 1 / gamma: the unclamped denominator gamma - gamma^2 var is zero
    state = EnsgdState(theta_bar=np.zeros(2), xi_bar=np.full(2, 1.0 / 0.5))
    scale = second_order_scale(state, cfg)
    assert scale == pytest.approx(np.full(2, 1.0 / (0.5 * cfg.variance_floor)), rel=1e-9)
    assert np.all(np.isfinite(ensgd_step(THETA, state, cfg)))


def test_step_rejects_mismatched_state():
    with pytest.raises(ValueError):
        ensgd_step(THETA, EnsgdState(theta_bar=np.zeros(3), xi_bar=np.zeros(3)), EnsgdConfig())


def test_sgd_step_folds_weight_decay_into_momentum():
    theta, buf = sgd_step(THETA, np.array([1.0, 1.0]), np.array([0.5, 0.0]), lr=0.1, momentum=0.9,
                          weight_decay=0.1)
    assert buf == pytest.approx([0.45 + 1.0 + 0.05, 1.0 - 0.1])
    assert theta == pytest.approx(THETA - 0.1 * buf)


def test_sgd_momentum_unrolls_over_two_steps():
    g = np.array([0.5, -1.0])
    theta, buf = sgd_step(np.zeros(2), g, np.zeros(2), lr=0.1, momentum=0.9)
    theta, buf = sgd_step(theta, g, buf, lr=0.1, momentum=0.9)
    assert theta == pytest.approx(-0.1 * g * (1.0 + 1.9))


# ---------------------------------------------------------------------------
# AWP and robust objectives
# ---------------------------------------------------------------------------


def test_awp_perturbation_sits_on_layer_sphere(linear_model, fig_point, linf_ball):
    x, y = fig_point
    X, labels = x[None, :], np.array([y])
    theta = np.array([1.2, -0.7])
    pgd = PgdConfig(steps=10, step_size=0.15)
    v = awp_perturbation(linear_model, theta, (X, labels), linf_ball, pgd, AwpConfig(gamma_a=0.1))
    assert np.linalg.norm(v) == pytest.approx(0.1 * np.linalg.norm(theta))
    adv, _ = robust_loss_and_grad(linear_model, theta, X, labels, linf_ball, pgd)
    perturbed, _ = robust_loss_and_grad(linear_model, theta, X, labels, linf_ball, pgd, AwpConfig(gamma_a=0.1))
    assert perturbed > adv


def test_awp_is_zero_without_radius(linear_model, fig_point, linf_ball):
    x, y = fig_point
    v = awp_perturbation(linear_model, np.array([1.0, 1.0]), (x[None, :], np.array([y])), linf_ball,
                         PgdConfig(), AwpConfig(gamma_a=0.0))
    assert v == pytest.approx([0.0, 0.0])


def test_one_awp_step_follows_the_layer_gradient(mlp_model, synthetic_data):
    train, _ = synthetic_data
    X, y = train.inputs[:20], train.labels[:20]
    theta = mlp_model.theta0
    ball = NormBall(p=Norm.LINF, epsilon=0.05)
    pgd = PgdConfig(steps=3, step_size=0.0125)
    adv = adversarial_batch(mlp_model, theta, X, y, ball, pgd)
    v = awp_perturbation(mlp_model, theta, (X, y), ball, pgd, AwpConfig(gamma_a=0.01), adversarial=adv)
    _, grad = mlp_model.mean_loss_and_grad(theta, adv, y)
    for block in mlp_model.layer_blocks():
        if not np.any(theta[block]):
            continue
        cosine = v[block] @ grad[block] / (np.linalg.norm(v[block]) * np.linalg.norm(grad[block]))
        assert cosine > 0.99
        assert np.linalg.norm(v[block]) == pytest.approx(0.01 * np.linalg.norm(theta[block]))


def test_awp_flat_block_still_reaches_its_sphere(linear_model):
    # zero inputs give an exactly zero weight gradient
    X, y = np.zeros((3, 2)), np.array([1.0, -1.0, 1.0])
    theta = np.array([0.6, -0.8])
    ball = NormBall(p=Norm.LINF, epsilon=0.0)
    v = awp_perturbation(
        linear_model, theta, (X, y), ball, PgdConfig(), AwpConfig(gamma_a=0.1), adversarial=X
    )
    assert v == pytest.approx(0.1 * theta)


def test_robust_loss_matches_dual_norm_on_linear_model(linear_model):
    rng = np.random.default_rng(6)
    X = rng.standard_normal((10, 2))
    y = np.where(rng.uniform(size=10) > 0.5, 1.0, -1.0)
    theta = np.array([0.9, -1.4])
    ball = NormBall(p=Norm.LINF, epsilon=0.3)
    loss, grad = robust_loss_and_grad(linear_model, theta, X, y, ball, PgdConfig(steps=10, step_size=0.15))
    exact_loss, exact_grad = dual_norm_adv_mean(theta, X, y, ball)
    assert loss == pytest.approx(exact_loss, abs=1e-12)
    assert grad == pytest.approx(exact_grad, abs=1e-12)


def test_cyclic_batches_wrap_in_order():
    data = LabeledDataset(inputs=np.arange(8.0).reshape(4, 2), labels=[1, -1, 1, -1])
    source = CyclicBatches(data, [np.array([0, 1]), np.array([2, 3])], offset=1)
    rng = np.random.default_rng(0)
    ids = [source.next_batch(rng)[2] for _ in range(3)]
    assert ids == [1, 0, 1]


def test_adversarial_objective_is_reproducible(mlp_model, synthetic_data):
    train, _ = synthetic_data
    ball = NormBall(p=Norm.LINF, epsilon=0.05)
    pgd = PgdConfig(steps=3, step_size=0.0125, random_init=True)

    def run(seed: int) -> tuple[float, np.ndarray]:
        objective = AdversarialObjective(mlp_model, RandomBatches(train, 20), ball, pgd)
        return objective.loss_and_grad(mlp_model.theta0, np.random.default_rng(seed))

    (loss_a, grad_a), (loss_b, grad_b) = run(1), run(1)
    assert loss_a == loss_b
    assert np.array_equal(grad_a, grad_b)
    assert run(2)[0] != loss_a
