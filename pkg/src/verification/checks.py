"""
Named numerical checks behind `verify-lemmas`.

Every check takes a seed, runs one property of the lab end to end and
returns an Outcome (measured value, bound, tolerance, verdict). `run_suites`
wraps each one into a timed CheckResult; a LabError raised inside a check
becomes a failed result naming the error instead of aborting the run.

Suites
    attacks   closed-form optimality, attack Lipschitz ratio, straddle witness
    probes    gradient-smoothness regions, implicit Jacobians, spectral norm
    entropy   Hessian identity, smoothing witness, Gaussian closed form,
              Langevin consistency, stationarity, second-order step
    surface   slope-jump sets of the reference surfaces
    training  desk training regression (slow)
"""

from __future__ import annotations

import time
from collections.abc import Callable, Sequence
from typing import NamedTuple

import numpy as np
import structlog

from src.attacks.closed_form import (
    dual_norm_adv_batch,
    dual_norm_adv_loss,
    exact_attack,
    exact_l2_attack,
    exact_linf_attack,
)
from src.entropy.objectives import FunctionObjective
from src.entropy.quadrature import GibbsQuadrature, local_entropy_exact
from src.entropy.sgld import sgld_estimate
from src.entropy.updates import ensgd_step
from src.exceptions import LabError
from src.finite_diff import dense_spectral_norm, fd_hessian, fd_hessian_from_grad
from src.model_core.base import DifferentiableModel
from src.model_core.factory import make_model
from src.models import (
    AwpConfig,
    CheckResult,
    EnsgdConfig,
    EnsgdState,
    ExperimentConfig,
    GridSpec,
    ImplicitCase,
    LabeledDataset,
    LossVariant,
    ModelKind,
    ModelSpec,
    Norm,
    NormBall,
    OptimizerKind,
    PredicateKind,
    Region,
    UpdateOrder,
)
from src.probes.assumption import estimate_assumption1_constants
from src.probes.implicit import implicit_jacobian, interior_optimum_check
from src.probes.lipschitz import (
    decade_growth,
    lipschitz_ratio_estimate,
    pair_family_ratios,
    sample_pairs,
    straddling_pairs,
)
from src.probes.oracle import argmax_oracle
from src.probes.spectral import hessian_spectral_norm
from src.surface.losses import SurfaceLoss
from src.surface.sampler import sample_entropy_surface, sample_surface

log = structlog.get_logger(__name__)

# Reference point of the two-parameter surfaces: one example, radius 0.6
FIG_X = np.array([-1.0, 1.0])
FIG_Y = 1.0
FIG_EPS = 0.6
ENSGD_GAMMA = 0.03
STRESS_GAMMA = 0.5
STRADDLE_SEPARATIONS = (1e-1, 1e-2, 1e-3)
# Convex losses add a same-signed first-order term to the slope jump, so the
# per-decade growth of the raw ratio sits just under 10
RAW_GROWTH_FLOOR = 9.5


class Outcome(NamedTuple):
    measured: float
    bound: float
    tolerance: float
    passed: bool
    detail: str = ""


CheckFn = Callable[[int], Outcome]


def _linear() -> DifferentiableModel:
    return make_model(ModelSpec(kind=ModelKind.LINEAR_LOGISTIC, input_dim=2))


def _swish() -> DifferentiableModel:
    return make_model(ModelSpec(kind=ModelKind.SWISH_LOGISTIC, input_dim=2))


def _fig_dataset() -> LabeledDataset:
    return LabeledDataset(inputs=FIG_X[None, :], labels=np.array([FIG_Y]))


def _adv_grad(ball: NormBall) -> Callable[[np.ndarray], np.ndarray]:
    X, y = FIG_X[None, :], np.array([FIG_Y])
    return lambda theta: dual_norm_adv_batch(theta, X, y, ball)[1][0]


# ---------------------------------------------------------------------------
# attacks
# ---------------------------------------------------------------------------

def check_closed_form_optimality(seed: int) -> Outcome:
    """Exact attacks reach the brute-force optimum and match the dual-norm loss."""
    rng = np.random.default_rng(seed)
    model = _linear()
    worst_gap = worst_dual = 0.0
    for k in range(100):
        eps = (0.3, 0.6, 1.0)[k % 3]
        p = Norm.L2 if k % 2 == 0 else Norm.LINF
        ball = NormBall(p=p, epsilon=eps)
        theta = rng.uniform(-2.0, 2.0, size=2)
        x = rng.standard_normal(2)
        y = float(rng.choice((-1.0, 1.0)))
        exact = exact_attack(theta, x, y, ball)
        oracle = argmax_oracle(model, theta, x, y, ball, restarts=4, seed=seed + k)
        worst_gap = max(worst_gap, oracle.achieved_loss - exact.achieved_loss)
        worst_dual = max(worst_dual, abs(exact.achieved_loss - dual_norm_adv_loss(theta, x, y, eps, p)))
    return Outcome(
        measured=worst_gap,
        bound=1e-3,
        tolerance=1e-9,
        passed=worst_gap <= 1e-3 and worst_dual <= 1e-9,
        detail=f"max |exact - dual-norm| = {worst_dual:.2e}",
    )


def check_attack_ratio_l2(seed: int) -> Outcome:
    """L2 attack map is Lipschitz with eps/theta_min on {||theta|| >= theta_min}.

    Measured is the worst sup ratio over the cases, normalized by eps/theta_min.
    """
    cases = ((FIG_EPS, 1.0, 2.0), (1.0, 2.0, 3.0))  # (eps, theta_min, square half-width)
    worst, parts = 0.0, []
    for k, (eps, theta_min, half) in enumerate(cases):
        region = Region.square(half, predicate=PredicateKind.NORM_AT_LEAST, theta_min=theta_min)
        est = lipschitz_ratio_estimate(
            lambda th, eps=eps: exact_l2_attack(th, FIG_X, FIG_Y, eps).x_prime,
            region, n_pairs=2000, seed=seed + k,
        )
        normalized = est.sup_ratio / (eps / theta_min)
        worst = max(worst, normalized)
        parts.append(f"eps={eps:g} theta_min={theta_min:g}: {est.sup_ratio:.4f}")
    return Outcome(worst, 1.0, 0.01, worst <= 1.01, ", ".join(parts))


def check_boundary_jacobian_norm(seed: int) -> Outcome:
    """Boundary implicit Jacobian of the L2 attack has spectral norm eps/||theta||."""
    theta = np.array([1.6, 1.2])  # ||theta|| = 2
    attack = exact_l2_attack(theta, FIG_X, FIG_Y, FIG_EPS)
    jac = implicit_jacobian(_linear(), theta, FIG_X, attack.x_prime, FIG_Y, ImplicitCase.BOUNDARY_L2)
    error = abs(jac.spectral_norm - 0.3)
    return Outcome(jac.spectral_norm, 0.3, 1e-6, error <= 1e-6)


def check_straddle_witness(seed: int) -> Outcome:
    """L-inf attack jumps by 2 eps across theta_2 = 0 and is constant inside an orthant."""
    def attack(theta: np.ndarray) -> np.ndarray:
        return exact_linf_attack(theta, FIG_X, FIG_Y, FIG_EPS).delta

    pairs = straddling_pairs(np.array([1.0, 0.0]), axis=1, separations=STRADDLE_SEPARATIONS)
    jumps = [float(np.linalg.norm(attack(a) - attack(b))) for a, b in pairs]
    growth = decade_growth(pair_family_ratios(attack, pairs))
    inside = straddling_pairs(np.array([1.0, 0.5]), axis=1, separations=STRADDLE_SEPARATIONS)
    inside_max = max(pair_family_ratios(attack, inside))
    jump_error = max(abs(j - 2 * FIG_EPS) for j in jumps)
    passed = min(growth) >= 9.0 and jump_error <= 1e-9 and inside_max == 0.0
    return Outcome(
        min(growth), 9.0, 1e-9, passed,
        f"jump error {jump_error:.1e}, in-orthant ratio {inside_max}",
    )


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

def _square_constants(seed: int, region: Region | None = None):
    region = region or Region.square(2.0)
    return estimate_assumption1_constants(
        _linear(), region, _fig_dataset(), n_pairs=1000, seed=seed, input_radius=FIG_EPS
    )


def check_l2_gradient_smoothness(seed: int) -> Outcome:
    """L2 adversarial gradient ratio on {||theta|| >= 1} stays under C_thth + (eps/theta_min) C_thx."""
    region = Region.square(2.0, predicate=PredicateKind.NORM_AT_LEAST, theta_min=1.0)
    report = _square_constants(seed, region)
    bound = report.c_theta_theta + FIG_EPS * report.c_theta_x
    est = lipschitz_ratio_estimate(_adv_grad(NormBall(p=Norm.L2, epsilon=FIG_EPS)), region, 2000, seed=seed + 1)
    return Outcome(est.sup_ratio, bound, 0.05 * bound, est.sup_ratio <= 1.05 * bound)


def check_composition_bound(seed: int) -> Outcome:
    """Adversarial gradient ratio stays under C_thth + C C_thx, C measured on the attack map itself."""
    region = Region.square(2.0, predicate=PredicateKind.NORM_AT_LEAST, theta_min=1.0)
    attack_ratio = lipschitz_ratio_estimate(
        lambda th: exact_l2_attack(th, FIG_X, FIG_Y, FIG_EPS).x_prime, region, 2000, seed=seed
    ).sup_ratio
    report = _square_constants(seed, region)
    bound = report.c_theta_theta + attack_ratio * report.c_theta_x
    grad = _adv_grad(NormBall(p=Norm.L2, epsilon=FIG_EPS))
    est = lipschitz_ratio_estimate(grad, region, 2000, seed=seed + 1)
    return Outcome(
        est.sup_ratio, bound, 0.05 * bound, est.sup_ratio <= 1.05 * bound,
        f"attack ratio {attack_ratio:.4f}",
    )


def check_linf_orthant_smoothness(seed: int) -> Outcome:
    """Inside one orthant the L-inf adversarial gradient ratio stays under C_thth."""
    report = _square_constants(seed)
    region = Region(lo=[0.0, 0.0], hi=[2.0, 2.0], predicate=PredicateKind.FIXED_ORTHANT, signs=[1, 1])
    est = lipschitz_ratio_estimate(
        _adv_grad(NormBall(p=Norm.LINF, epsilon=FIG_EPS)), region, 2000, seed=seed + 1
    )
    bound = report.c_theta_theta
    return Outcome(est.sup_ratio, bound, 0.05 * bound, est.sup_ratio <= 1.05 * bound)


def check_two_sided_bound(seed: int) -> Outcome:
    """||grad L(t1) - grad L(t2)|| <= C_thth ||t1 - t2|| + 2 eps C_thx on the whole square, both norms."""
    region = Region.square(2.0)
    report = _square_constants(seed)
    pairs = sample_pairs(region, 2000, 1e-4, np.random.default_rng(seed + 2))
    worst, parts = 0.0, []
    for p in (Norm.L2, Norm.LINF):
        grad = _adv_grad(NormBall(p=p, epsilon=FIG_EPS))
        norm_worst = 0.0
        for a, b in pairs:
            lhs = float(np.linalg.norm(grad(a) - grad(b)))
            rhs = report.c_theta_theta * float(np.linalg.norm(a - b)) + 2 * FIG_EPS * report.c_theta_x
            norm_worst = max(norm_worst, lhs / rhs)
        worst = max(worst, norm_worst)
        parts.append(f"L{p.value}: {norm_worst:.3f}")
    return Outcome(worst, 1.0, 0.0, worst <= 1.0, f"{len(pairs)} pairs, " + ", ".join(parts))


def _oracle_jacobian(
    model: DifferentiableModel, theta: np.ndarray, ball: NormBall, h: float, seed: int
) -> np.ndarray:
    columns = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        plus = argmax_oracle(model, theta + e, FIG_X, FIG_Y, ball, seed=seed).x_prime
        minus = argmax_oracle(model, theta - e, FIG_X, FIG_Y, ball, seed=seed).x_prime
        columns.append((plus - minus) / (2 * h))
    return np.stack(columns, axis=1)


def check_interior_jacobian(seed: int) -> Outcome:
    """Swish interior optimum: implicit Jacobian agrees with oracle differences along theta."""
    model = _swish()
    theta = np.array([1.5, -1.5])
    ball = NormBall(p=Norm.LINF, epsilon=FIG_EPS)
    attack = argmax_oracle(model, theta, FIG_X, FIG_Y, ball, seed=seed)
    interior = interior_optimum_check(model, theta, FIG_X, attack.x_prime, FIG_Y, ball)
    jac = implicit_jacobian(model, theta, FIG_X, attack.x_prime, FIG_Y, ImplicitCase.INTERIOR)
    fd = _oracle_jacobian(model, theta, ball, 1e-4, seed)
    # The maximizers form a line orthogonal to theta; only the theta component is determined
    unit = theta / np.linalg.norm(theta)
    proj = np.outer(unit, unit)
    error = float(np.linalg.norm(proj @ (jac.jacobian - fd)) / np.linalg.norm(proj @ jac.jacobian))
    passed = interior.strictly_interior and interior.is_stationary and error < 1e-3
    return Outcome(
        error, 1e-3, 0.0, passed,
        f"strictly_interior={interior.strictly_interior} rank={jac.rank}",
    )


def check_boundary_jacobian(seed: int) -> Outcome:
    """Linear L2 boundary optimum: bordered-system Jacobian agrees with oracle differences."""
    model = _linear()
    theta = np.array([1.2, -0.7])
    ball = NormBall(p=Norm.L2, epsilon=FIG_EPS)
    attack = argmax_oracle(model, theta, FIG_X, FIG_Y, ball, seed=seed)
    jac = implicit_jacobian(model, theta, FIG_X, attack.x_prime, FIG_Y, ImplicitCase.BOUNDARY_L2)
    fd = _oracle_jacobian(model, theta, ball, 1e-4, seed)
    error = float(np.linalg.norm(jac.jacobian - fd) / np.linalg.norm(jac.jacobian))
    return Outcome(error, 1e-3, 0.0, attack.on_boundary and error < 1e-3, f"det={jac.determinant:.3g}")


def check_spectral_norm(seed: int) -> Outcome:
    """Power iteration on Hessian-vector products matches the dense Hessian norm."""
    model = make_model(ModelSpec(kind=ModelKind.MLP, input_dim=2, hidden=[4]), init_seed=seed)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((16, 2))
    y = np.sign(X[:, 0])

    def grad(theta: np.ndarray) -> np.ndarray:
        return model.mean_loss_and_grad(theta, X, y)[1]

    theta = model.theta0.copy()
    est = hessian_spectral_norm(lambda t: model.mean_loss_and_grad(t, X, y)[0], theta, grad_fn=grad, seed=seed)
    dense = dense_spectral_norm(fd_hessian_from_grad(grad, theta))
    error = abs(est.value - dense) / dense
    return Outcome(error, 1e-4, 0.0, est.converged and error <= 1e-4, f"sigma1={dense:.6g}")


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def _fig_loss(variant: LossVariant) -> SurfaceLoss:
    return SurfaceLoss(_linear(), FIG_X[None, :], np.array([FIG_Y]), variant, FIG_EPS)


def _quadratic(nodes: np.ndarray) -> np.ndarray:
    return 0.5 * np.sum(nodes**2, axis=1)


def check_entropy_hessian_identity(seed: int) -> Outcome:
    """FD Hessian of the quadrature -F equals gamma I - gamma^2 Cov; sigma_1 obeys its bound."""
    rng = np.random.default_rng(seed)
    lossfn = _fig_loss(LossVariant.ADV_LINF)
    worst_rel = worst_excess = 0.0
    for gamma in (ENSGD_GAMMA, STRESS_GAMMA):
        for theta in rng.uniform(-2.0, 2.0, size=(20, 2)):
            quad = GibbsQuadrature(lossfn, gamma, theta)
            ev = quad.evaluate(theta)
            fd = fd_hessian(quad.value, theta, 1e-3)
            worst_rel = max(worst_rel, float(np.max(np.abs(fd - ev.hessian)) / np.max(np.abs(ev.hessian))))
            bound = gamma + gamma**2 * float(np.linalg.norm(ev.covariance, "fro"))
            worst_excess = max(worst_excess, dense_spectral_norm(fd) - bound)
    passed = worst_rel < 1e-3 and worst_excess <= 1e-6
    return Outcome(worst_rel, 1e-3, 1e-6, passed, f"max sigma_1 - bound = {worst_excess:.2e}")


def check_entropy_smoothing(seed: int) -> Outcome:
    """Across theta_2 = 0 the raw ratio blows up per decade while the -F ratio stays flat."""
    center = np.array([1.5, 0.0])
    pairs = straddling_pairs(center, axis=1, separations=STRADDLE_SEPARATIONS)
    raw = pair_family_ratios(_adv_grad(NormBall(p=Norm.LINF, epsilon=FIG_EPS)), pairs)
    raw_growth = min(decade_growth(raw))

    lossfn = _fig_loss(LossVariant.ADV_LINF)
    straddle = pair_family_ratios(GibbsQuadrature(lossfn, ENSGD_GAMMA, center).gradient, pairs)
    inside_center = np.array([1.5, 0.5])
    inside = pair_family_ratios(
        GibbsQuadrature(lossfn, ENSGD_GAMMA, inside_center).gradient,
        straddling_pairs(inside_center, axis=1, separations=STRADDLE_SEPARATIONS),
    )
    variation = max(straddle) / min(straddle)
    versus_orthant = max(straddle) / max(inside)
    passed = raw_growth >= RAW_GROWTH_FLOOR and variation < 2.0 and versus_orthant < 2.0
    return Outcome(
        variation, 2.0, 0.0, passed,
        f"raw growth per decade {raw_growth:.3f}, -F straddle/orthant {versus_orthant:.3f}",
    )


def check_gaussian_closed_form(seed: int) -> Outcome:
    """-grad F of (1/2)||t||^2 at (1, 0) is gamma/(1 + gamma) * theta."""
    theta = np.array([1.0, 0.0])
    ev = local_entropy_exact(_quadratic, theta, ENSGD_GAMMA, want=("gradient",))
    expected = ENSGD_GAMMA / (1.0 + ENSGD_GAMMA) * theta
    error = float(np.max(np.abs(ev.gradient - expected)))
    return Outcome(error, 1e-6, 0.0, error <= 1e-6)


def check_langevin_consistency(seed: int) -> Outcome:
    """Mean Langevin estimate over 50 chains sits within 3 standard errors of the quadrature mean."""
    theta = np.array([1.0, 0.0])
    cfg = EnsgdConfig(gamma=ENSGD_GAMMA, eta_prime=0.01, eps_langevin=1e-4, langevin_iters=2000, alpha=0.75)
    objective = FunctionObjective(lambda t: (0.5 * float(t @ t), t))
    bars = np.array([sgld_estimate(objective, theta, cfg, seed=seed + k).theta_bar for k in range(50)])
    target = local_entropy_exact(_quadratic, theta, ENSGD_GAMMA, want=()).mean
    stderr = bars.std(axis=0, ddof=1) / np.sqrt(len(bars))
    z = np.abs(bars.mean(axis=0) - target) / np.maximum(stderr, 1e-300)
    return Outcome(float(z.max()), 3.0, 0.0, bool(np.all(z <= 3.0)), f"stderr {stderr.max():.2e}")


def check_stationarity(seed: int) -> Outcome:
    """First-order EnSGD with exact moments converges to the quadratic's minimizer."""
    theta = np.array([1.0, -0.5])
    cfg = EnsgdConfig(gamma=ENSGD_GAMMA, eta=1.0 / ENSGD_GAMMA)
    for _ in range(20):
        ev = local_entropy_exact(_quadratic, theta, ENSGD_GAMMA, want=())
        state = EnsgdState(theta_bar=ev.mean, xi_bar=np.diag(ev.covariance) + ev.mean**2)
        theta = ensgd_step(theta, state, cfg)
    norm = float(np.linalg.norm(theta))
    return Outcome(norm, 1e-6, 0.0, norm <= 1e-6)


def check_second_order_step(seed: int) -> Outcome:
    """With exact Gaussian moments the second-order step is the Newton step on -F."""
    theta = np.array([1.0, 0.5])
    ev = local_entropy_exact(_quadratic, theta, ENSGD_GAMMA)
    state = EnsgdState(theta_bar=ev.mean, xi_bar=np.diag(ev.covariance) + ev.mean**2)
    cfg = EnsgdConfig(gamma=ENSGD_GAMMA, eta=1.0, order=UpdateOrder.SECOND)
    stepped = ensgd_step(theta, state, cfg)
    newton = theta - np.linalg.solve(ev.hessian, ev.gradient)
    error = float(np.linalg.norm(stepped - newton))
    return Outcome(error, 1e-6, 0.0, error <= 1e-6)


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------

def _flag_set(grid) -> set[tuple[int, int]]:
    return {(m.i, m.j) for m in grid.discontinuities}


def check_surface_flags(seed: int) -> Outcome:
    """81x81 reference grids: kinks at theta = 0 (L2), on the axes (L-inf), none elsewhere."""
    spec = GridSpec(resolution=81)
    mid = spec.resolution // 2
    axes = {(i, j) for i in range(spec.resolution) for j in range(spec.resolution) if mid in (i, j)}
    expected = {
        LossVariant.CLEAN: set(),
        LossVariant.ADV_L2: {(mid, mid)},
        LossVariant.ADV_LINF: axes,
    }
    mismatches = []
    for variant, want in expected.items():
        grid = sample_surface(_fig_loss(variant), spec.model_copy(update={"variant": variant}))
        if _flag_set(grid) != want:
            mismatches.append(variant.value)
    for variant in (LossVariant.ADV_L2, LossVariant.ADV_LINF):
        grid = sample_entropy_surface(
            _fig_loss(variant), spec.model_copy(update={"variant": variant, "entropy": True}), ENSGD_GAMMA
        )
        if grid.discontinuities:
            mismatches.append(f"entropy_of({variant.value})")
    return Outcome(float(len(mismatches)), 0.0, 0.0, not mismatches, ", ".join(mismatches))


def check_pgd_surface(seed: int) -> Outcome:
    """PGD never beats the closed form and reaches it on the linear model."""
    spec = GridSpec(resolution=21)
    worst = 0.0
    for closed, pgd in ((LossVariant.ADV_L2, LossVariant.ADV_L2_PGD), (LossVariant.ADV_LINF, LossVariant.ADV_LINF_PGD)):
        a = sample_surface(_fig_loss(closed), spec.model_copy(update={"variant": closed}))
        b = sample_surface(_fig_loss(pgd), spec.model_copy(update={"variant": pgd}))
        worst = max(worst, float(np.max(np.abs(a.values - b.values))))
    return Outcome(worst, 1e-6, 0.0, worst <= 1e-6)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def desk_config(optimizer: OptimizerKind, awp: bool = False, epochs: int = 50) -> ExperimentConfig:
    """Desk-scale experiment on the synthetic dataset for one optimizer."""
    eta = 0.9 if optimizer is OptimizerKind.ENSGD2 else 0.9 / ENSGD_GAMMA
    return ExperimentConfig(
        name=f"desk_{optimizer.value}{'_awp' if awp else ''}",
        optimizer=optimizer,
        ensgd=EnsgdConfig(gamma=ENSGD_GAMMA, eta=eta, eta_prime=0.1, langevin_iters=5, alpha=0.75),
        awp=AwpConfig(gamma_a=0.01) if awp else None,
        epochs=epochs,
    )


def check_desk_training(seed: int) -> Outcome:
    """Every optimizer, with and without AWP, at least halves the robust training loss."""
    from src.training.harness import adversarial_train

    worst = 0.0
    failures = []
    for optimizer in OptimizerKind:
        for awp in (False, True):
            config = desk_config(optimizer, awp).model_copy(update={"seed": seed})
            run = adversarial_train(config)
            if not run.completed:
                failures.append(f"{config.name} aborted")
                continue
            ratio = run.records[-1].train_robust_loss / run.records[0].train_robust_loss
            worst = max(worst, ratio)
            if ratio > 0.5:
                failures.append(f"{config.name} ratio {ratio:.3f}")
    return Outcome(worst, 0.5, 0.0, not failures, "; ".join(failures))


SUITES: dict[str, list[tuple[str, CheckFn]]] = {
    "attacks": [
        ("closed_form_optimality", check_closed_form_optimality),
        ("l2_attack_ratio", check_attack_ratio_l2),
        ("l2_boundary_jacobian_norm", check_boundary_jacobian_norm),
        ("linf_straddle_witness", check_straddle_witness),
    ],
    "probes": [
        ("l2_gradient_smoothness", check_l2_gradient_smoothness),
        ("attack_composition_smoothness", check_composition_bound),
        ("linf_orthant_smoothness", check_linf_orthant_smoothness),
        ("two_sided_gradient_bound", check_two_sided_bound),
        ("interior_implicit_jacobian", check_interior_jacobian),
        ("boundary_implicit_jacobian", check_boundary_jacobian),
        ("hessian_spectral_norm", check_spectral_norm),
    ],
    "entropy": [
        ("entropy_hessian_identity", check_entropy_hessian_identity),
        ("entropy_smoothing_witness", check_entropy_smoothing),
        ("gaussian_closed_form", check_gaussian_closed_form),
        ("langevin_consistency", check_langevin_consistency),
        ("stationarity_preservation", check_stationarity),
        ("second_order_newton_step", check_second_order_step),
    ],
    "surface": [
        ("reference_surface_flags", check_surface_flags),
        ("pgd_matches_closed_form", check_pgd_surface),
    ],
    "training": [
        ("desk_training_regression", check_desk_training),
    ],
}

DEFAULT_SUITES = ("attacks", "probes", "entropy")


def run_check(name: str, suite: str, fn: CheckFn, seed: int) -> CheckResult:
    started = time.perf_counter()
    try:
        outcome = fn(seed)
    except LabError as exc:
        log.error("check_errored", check=name, error=str(exc))
        outcome = Outcome(float("nan"), float("nan"), 0.0, False, f"{type(exc).__name__}: {exc}")
    result = CheckResult(
        name=name,
        suite=suite,
        passed=bool(outcome.passed),
        measured=float(outcome.measured),
        bound=float(outcome.bound),
        tolerance=float(outcome.tolerance),
        seed=seed,
        seconds=time.perf_counter() - started,
        detail=outcome.detail,
    )
    log.info("check_finished", check=name, suite=suite, passed=result.passed, seconds=round(result.seconds, 3))
    return result


def run_suites(
    suites: Sequence[str] = DEFAULT_SUITES, seed: int = 0, only: Sequence[str] | None = None
) -> list[CheckResult]:
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}; known: {sorted(SUITES)}")
    results = []
    for suite in suites:
        for name, fn in SUITES[suite]:
            if only and name not in only:
                continue
            results.append(run_check(name, suite, fn, seed))
    return results
