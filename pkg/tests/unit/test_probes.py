"""
Unit tests for the smoothness probes: pair sampling and Lipschitz ratios,
regularity-constant estimates, the argmax oracle, power iteration and
epsilon-sharpness.
"""

from __future__ import annotations

import numpy as np
import pytest

from src.attacks.closed_form import dual_norm_adv_mean, exact_l2_attack, exact_linf_attack
from src.exceptions import EmptyRegionError, UnsupportedDimensionError
from src.models import Norm, NormBall, PredicateKind, ProbeReport, Region
from src.probes.assumption import estimate_assumption1_constants
from src.probes.lipschitz import (
    decade_growth,
    lipschitz_ratio_estimate,
    pair_family_ratios,
    sample_pairs,
    straddling_pairs,
)
from src.probes.oracle import argmax_oracle
from src.probes.sharpness import epsilon_sharpness
from src.probes.spectral import hessian_spectral_norm

A = np.diag([3.0, 1.0])


def quadratic(theta: np.ndarray) -> float:
    return 0.5 * float(theta @ A @ theta)


# ---------------------------------------------------------------------------
# Regions and pair sampling
# ---------------------------------------------------------------------------


def test_region_predicates():
    ring = Region.square(2.0, predicate=PredicateKind.NORM_AT_LEAST, theta_min=1.0)
    orthant = Region(lo=[-2, -2], hi=[2, 2], predicate=PredicateKind.FIXED_ORTHANT, signs=[1, -1])
    assert ring.contains(np.array([1.5, 0.0]))
    assert not ring.contains(np.array([0.5, 0.5]))
    assert orthant.contains(np.array([0.3, -0.1]))
    assert not orthant.contains(np.array([0.3, 0.0]))


def test_region_rejects_missing_predicate_arguments():
    with pytest.raises(ValueError):
        Region.square(1.0, predicate=PredicateKind.NORM_AT_LEAST)
    with pytest.raises(ValueError):
        Region.square(1.0, predicate=PredicateKind.FIXED_ORTHANT, signs=[1])


def test_sampled_pairs_respect_predicate_and_separation():
    region = Region.square(2.0, predicate=PredicateKind.NORM_AT_LEAST, theta_min=1.0)
    pairs = sample_pairs(region, 300, 1e-3, np.random.default_rng(0))
    assert len(pairs) == 300
    for a, b in pairs:
        assert np.linalg.norm(a) >= 1.0 and np.linalg.norm(b) >= 1.0
        assert np.linalg.norm(a - b) >= 1e-3


def test_tiny_region_has_no_pairs():
    with pytest.raises(EmptyRegionError):
        sample_pairs(Region(lo=[0.0, 0.0], hi=[1e-6, 1e-6]), 10, 1e-4, np.random.default_rng(0))


def test_lipschitz_ratio_of_linear_map_approaches_operator_norm():
    est = lipschitz_ratio_estimate(lambda t: A @ t, Region.square(1.0), n_pairs=500, seed=0)
    assert est.sup_ratio <= 3.0 + 1e-12
    assert est.sup_ratio > 2.8
    assert est.pair_count == 500


def test_explicit_pairs_below_separation_are_dropped():
    pairs = [(np.zeros(2), np.full(2, 1e-6))]
    with pytest.raises(EmptyRegionError):
        lipschitz_ratio_estimate(lambda t: t, Region.square(1.0), 1, pairs=pairs)


def test_straddling_pairs_are_symmetric_about_center():
    pairs = straddling_pairs(np.array([1.0, 0.0]), axis=1, separations=[0.1, 0.01])
    assert pairs[0][0] == pytest.approx([1.0, 0.05])
    assert pairs[0][1] == pytest.approx([1.0, -0.05])
    assert np.linalg.norm(pairs[1][0] - pairs[1][1]) == pytest.approx(0.01)


def test_linf_attack_ratio_grows_tenfold_per_decade(fig_point):
    x, y = fig_point

    def attack(theta):
        return exact_linf_attack(theta, x, y, 0.6).delta

    pairs = straddling_pairs(np.array([1.0, 0.0]), 1, [1e-1, 1e-2, 1e-3])
    ratios = pair_family_ratios(attack, pairs)
    assert ratios == pytest.approx([12.0, 120.0, 1200.0])
    assert decade_growth(ratios) == pytest.approx([10.0, 10.0])


def test_l2_attack_ratio_is_bounded_away_from_origin(fig_point):
    x, y = fig_point
    region = Region.square(2.0, predicate=PredicateKind.NORM_AT_LEAST, theta_min=1.0)
    est = lipschitz_ratio_estimate(lambda t: exact_l2_attack(t, x, y, 0.6).x_prime, region, 500, seed=1)
    assert est.sup_ratio <= 0.6 + 1e-9


# ---------------------------------------------------------------------------
# Regularity constants
# ---------------------------------------------------------------------------


def test_constants_of_linear_model(linear_model, fig_dataset):
    report = estimate_assumption1_constants(
        linear_model, Region.square(2.0), fig_dataset, n_pairs=200, seed=0, input_radius=0.6
    )
    assert isinstance(report, ProbeReport)
    # grad_theta = -y sigmoid(-y z) x, so C_thth <= ||x||^2 / 4 on the input box
    assert 0.0 < report.c_theta_theta <= 0.25 * (1.6**2 * 2) + 1e-9
    assert report.c_theta > 0.0
    assert report.c_theta_x > 0.0
    assert report.sample_counts["theta_pairs"] == 200
    assert report.region["lo"] == [-2.0, -2.0]
    assert report.estimator == "empirical_sup"


def test_constants_are_seeded(linear_model, fig_dataset):
    a = estimate_assumption1_constants(linear_model, Region.square(1.0), fig_dataset, 50, seed=3)
    b = estimate_assumption1_constants(linear_model, Region.square(1.0), fig_dataset, 50, seed=3)
    assert a == b


def test_probe_report_rejects_negative_constants():
    with pytest.raises(ValueError):
        ProbeReport(c_theta=-1.0, c_theta_theta=0.0, c_theta_x=0.0, region={}, input_radius=0.0,
                    seed=0, sample_counts={})


# ---------------------------------------------------------------------------
# Argmax oracle
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("p", [Norm.L2, Norm.LINF])
def test_oracle_recovers_closed_form(linear_model, fig_point, p):
    x, y = fig_point
    theta = np.array([1.2, -0.7])
    ball = NormBall(p=p, epsilon=0.6)
    oracle = argmax_oracle(linear_model, theta, x, y, ball, seed=0)
    exact = exact_l2_attack(theta, x, y, 0.6) if p is Norm.L2 else exact_linf_attack(theta, x, y, 0.6)
    assert oracle.achieved_loss == pytest.approx(exact.achieved_loss, abs=1e-9)
    assert oracle.delta == pytest.approx(exact.delta, abs=1e-6)
    assert oracle.on_boundary


def test_oracle_refuses_high_dimension(linear_model):
    with pytest.raises(UnsupportedDimensionError):
        argmax_oracle(linear_model, np.ones(4), np.ones(4), 1.0, NormBall(epsilon=0.1))


def test_oracle_zero_radius(linear_model, fig_point):
    x, y = fig_point
    result = argmax_oracle(linear_model, np.array([1.0, 1.0]), x, y, NormBall(epsilon=0.0))
    assert result.delta == pytest.approx([0.0, 0.0])


# ---------------------------------------------------------------------------
# Spectral norm and sharpness
# ---------------------------------------------------------------------------


def test_power_iteration_with_analytic_gradient():
    est = hessian_spectral_norm(quadratic, np.array([0.4, -0.2]), grad_fn=lambda t: A @ t)
    assert est.converged
    assert est.value == pytest.approx(3.0, rel=1e-6)


def test_power_iteration_from_function_values():
    est = hessian_spectral_norm(quadratic, np.array([0.4, -0.2]))
    assert est.value == pytest.approx(3.0, rel=1e-4)


def test_power_iteration_reports_non_convergence():
    est = hessian_spectral_norm(quadratic, np.zeros(2), grad_fn=lambda t: A @ t, max_iter=1)
    assert not est.converged
    assert est.iterations == 1


def test_sharpness_of_quadratic_matches_quadratic_model():
    est = epsilon_sharpness(quadratic, np.zeros(2), 0.1, restarts=4, grad_fn=lambda t: A @ t)
    # max over the radius-0.1 ball is 3 * 0.1^2 / 2, base loss 0
    assert est.exact == pytest.approx(0.015, rel=1e-4)
    assert est.approximation == pytest.approx(0.015, rel=1e-4)
    assert est.spectral_norm == pytest.approx(3.0, rel=1e-6)


def test_sharpness_at_adversarially_trained_theta(synthetic_data):
    train, _ = synthetic_data
    ball = NormBall(p=Norm.L2, epsilon=0.05)

    def robust(theta: np.ndarray) -> tuple[float, np.ndarray]:
        return dual_norm_adv_mean(theta, train.inputs, train.labels, ball)

    theta = np.array([0.5, 0.5])
    for _ in range(200):
        theta = theta - 0.5 * robust(theta)[1]
    est = epsilon_sharpness(
        lambda t: robust(t)[0], theta, 0.05, restarts=4, grad_fn=lambda t: robust(t)[1]
    )
    assert est.exact >= est.approximation - 1e-2
    assert est.base_loss == pytest.approx(robust(theta)[0])


def test_sharpness_needs_positive_radius():
    with pytest.raises(ValueError):
        epsilon_sharpness(quadratic, np.zeros(2), 0.0)
