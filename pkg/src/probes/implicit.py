"""
Implicit-function sensitivities of an optimal attack x'(theta).

Interior optimum
    grad_x l(x', theta) = 0. Differentiating in theta gives

        H D = -C,  H = hess_x l(x', theta) (d x d),  C = cross_hess (d x m)

    and D = D_theta x' (d x m, column j = dx'/dtheta_j).

Boundary optimum of the L2 ball
    Stationarity of the Lagrangian J = l(x') - mu (||x' - x||_2 - eps) plus
    the active constraint. With r = ||x' - x||, n = (x' - x)/r and
    M = H - mu I / r + mu (x' - x)(x' - x)^T / r^3 the bordered matrix is

        B = [[0, n^T],
             [n, M  ]]

    and B [d mu; D] = -[0; C]. Only the x' rows are kept.

Single-index models (z depends on theta^T x only) have rank-one H: their
interior maximizers form an affine slice and H is singular. When the system
is consistent the minimum-norm solution is returned together with its rank;
an inconsistent or fully degenerate system raises SingularSystemError.
"""

from __future__ import annotations

import numpy as np
import structlog
from scipy import linalg

from src.exceptions import BoundaryPreconditionError, SingularSystemError, UndefinedNormalError
from src.finite_diff import dense_spectral_norm
from src.model_core.base import DifferentiableModel
from src.models import (
    BorderedHessianCheck,
    ImplicitCase,
    ImplicitJacobian,
    InteriorCheck,
    NormBall,
)

log = structlog.get_logger(__name__)

_RANK_RTOL = 1e-9
_CONSISTENCY_RTOL = 1e-6


def interior_optimum_check(
    model: DifferentiableModel,
    theta: np.ndarray,
    x: np.ndarray,
    x_prime: np.ndarray,
    y: float,
    ball: NormBall,
    tol_grad: float = 1e-6,
    tol_eig: float = 1e-10,
    tol_boundary: float = 1e-6,
) -> InteriorCheck:
    """Is x' a stationary point strictly inside the ball, and how curved is it?"""
    _, _, grad_x = model.loss_and_grads(theta, x_prime, y)
    eigs = linalg.eigvalsh(model.hess_x(theta, x_prime, y))
    max_eig = float(eigs.max())
    distance = ball.norm(np.asarray(x_prime) - np.asarray(x))
    grad_norm = float(np.linalg.norm(grad_x))
    return InteriorCheck(
        is_stationary=grad_norm < tol_grad,
        max_eig=max_eig,
        # c = -max eigenvalue when the Hessian is negative definite, else no curvature bound
        c=-max_eig if max_eig < -tol_eig else 0.0,
        strictly_interior=distance < ball.epsilon - tol_boundary,
        grad_norm=grad_norm,
        distance=distance,
    )


def _normal(x: np.ndarray, x_prime: np.ndarray) -> tuple[np.ndarray, float]:
    d = np.asarray(x_prime, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise UndefinedNormalError("x' equals x: the constraint normal is undefined")
    return d, r


def bordered_hessian_check(
    model: DifferentiableModel,
    theta: np.ndarray,
    x: np.ndarray,
    x_prime: np.ndarray,
    y: float,
    epsilon: float | None = None,
) -> BorderedHessianCheck:
    """Assemble the L2 bordered Hessian at a boundary attack and fit mu."""
    d, r = _normal(x, x_prime)
    if epsilon is not None and abs(r - epsilon) > 1e-6:
        raise BoundaryPreconditionError(
            f"x' is not on the L2 sphere: ||x' - x|| = {r:.9g}, eps = {epsilon}"
        )
    n = d / r
    _, _, grad_x = model.loss_and_grads(theta, x_prime, y)
    # Least-squares fit of grad_x = mu * n, i.e. projection on the normal
    mu = float(n @ grad_x)
    residual = float(np.linalg.norm(grad_x - mu * n))

    hess = model.hess_x(theta, x_prime, y)
    inner = hess - mu * np.eye(d.size) / r + mu * np.outer(d, d) / r**3
    dim = d.size + 1
    matrix = np.zeros((dim, dim))
    matrix[0, 1:] = n
    matrix[1:, 0] = n
    matrix[1:, 1:] = 0.5 * (inner + inner.T)
    svals = linalg.svdvals(matrix)
    return BorderedHessianCheck(
        mu=mu,
        matrix=matrix,
        determinant=float(linalg.det(matrix)),
        min_singular_value=float(svals.min()),
        stationarity_residual=residual,
    )


def _solve(system: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm solution of system @ X = rhs, rejecting inconsistent systems."""
    svals = linalg.svdvals(system)
    scale = float(svals.max()) if svals.size else 0.0
    rank = int(np.sum(svals > _RANK_RTOL * scale)) if scale > 0 else 0
    if rank == 0:
        raise SingularSystemError("implicit system matrix vanishes", determinant=0.0)
    if rank == system.shape[0]:
        return linalg.solve(system, rhs), rank
    solution = linalg.pinv(system, rtol=_RANK_RTOL) @ rhs
    residual = float(np.linalg.norm(system @ solution - rhs))
    if residual > _CONSISTENCY_RTOL * max(float(np.linalg.norm(rhs)), 1e-300):
        raise SingularSystemError(
            f"rank-deficient implicit system is inconsistent (residual {residual:.3g})",
            determinant=float(linalg.det(system)),
        )
    log.debug("implicit_system_rank_deficient", rank=rank, size=system.shape[0])
    return solution, rank


def implicit_jacobian(
    model: DifferentiableModel,
    theta: np.ndarray,
    x: np.ndarray,
    x_prime: np.ndarray,
    y: float,
    case: ImplicitCase,
) -> ImplicitJacobian:
    """D_theta x' from the stationarity (interior) or KKT (boundary L2) system."""
    theta = np.asarray(theta, dtype=np.float64)
    cross = model.cross_hess(theta, x_prime, y)

    if case is ImplicitCase.INTERIOR:
        system = model.hess_x(theta, x_prime, y)
        jac, rank = _solve(system, -cross)
        det = float(linalg.det(system))
    else:
        check = bordered_hessian_check(model, theta, x, x_prime, y)
        system = check.matrix
        rhs = np.vstack([np.zeros((1, cross.shape[1])), -cross])
        full, rank = _solve(system, rhs)
        jac = full[1:]
        det = check.determinant

    return ImplicitJacobian(
        case=case,
        jacobian=jac,
        spectral_norm=dense_spectral_norm(jac),
        rank=rank,
        determinant=det,
    )
