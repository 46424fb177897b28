"""
Exact local entropy in low dimension by tensor-product quadrature.

For a loss L over parameters theta' (dimension <= 3) and scope gamma:

    -F(theta)      = -log  sum_k w_k exp(-L(t_k) - gamma/2 ||theta - t_k||^2)
    -grad F(theta) = gamma (theta - E[t])
    -hess F(theta) = gamma I - gamma^2 Cov[t]

where E and Cov are moments of the discrete Gibbs measure p_k proportional
to the summand above. The identities hold exactly for the discrete measure,
so finite differences of the quadrature value reproduce the moment formulas
up to rounding.

GibbsQuadrature evaluates L once on a fixed node set (a box of `half_width`
standard deviations of the Gaussian factor around `center`, optionally
widened by `extent`) and can then be queried at any theta whose Gaussian
factor stays inside the box. All sums go through logsumexp.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Collection
from typing import Literal

import numpy as np
import structlog
from scipy.special import logsumexp

from src.exceptions import QuadratureDegeneracyError, UnsupportedDimensionError
from src.models import EntropyEvaluation, QuadratureRule, QuadratureSpec

log = structlog.get_logger(__name__)

BatchLoss = Callable[[np.ndarray], np.ndarray]
EntropyPiece = Literal["value", "gradient", "hessian"]

MAX_QUADRATURE_DIM = 3
ALL_PIECES: tuple[EntropyPiece, ...] = ("value", "gradient", "hessian")
_EDGE_MASS_WARN = 1e-6


def as_batch_loss(fn: Callable[[np.ndarray], float]) -> BatchLoss:
    """Lift a scalar loss of one parameter vector to rows of a (k, m) array."""
    def batched(nodes: np.ndarray) -> np.ndarray:
        return np.array([float(fn(row)) for row in nodes], dtype=np.float64)
    return batched


def _axis_rule(lo: float, hi: float, points: int, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.rule is QuadratureRule.MIDPOINT:
        h = (hi - lo) / points
        return lo + h * (np.arange(points) + 0.5), np.full(points, h)
    panels = points // spec.panel_order
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(spec.panel_order)
    edges = np.linspace(lo, hi, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halves = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + halves[:, None] * ref_nodes[None, :]).ravel()
    weights = (halves[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


def _points_for(spec: QuadratureSpec, half: float, base_half: float) -> int:
    """Points per axis keeping the node spacing of the unwidened box."""
    points = math.ceil(spec.points_per_axis * half / base_half)
    step = 2 if spec.rule is QuadratureRule.MIDPOINT else spec.panel_order
    return step * math.ceil(points / step)


class GibbsQuadrature:
    """Fixed quadrature nodes and losses for repeated local-entropy queries."""

    def __init__(
        self,
        lossfn: BatchLoss,
        gamma: float,
        center: np.ndarray,
        spec: QuadratureSpec | None = None,
        extent: float = 0.0,
    ) -> None:
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.spec = spec or QuadratureSpec()
        self.gamma = float(gamma)
        self.center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        dim = self.center.size
        if dim > MAX_QUADRATURE_DIM:
            raise UnsupportedDimensionError(
                f"exact local entropy supports dim <= {MAX_QUADRATURE_DIM}, got {dim}"
            )

        base_half = self.spec.half_width / math.sqrt(self.gamma)
        half = base_half + max(float(extent), 0.0)
        points = self.spec.points_per_axis if extent <= 0 else _points_for(self.spec, half, base_half)
        axes, weights = zip(*(
            _axis_rule(c - half, c + half, points, self.spec) for c in self.center
        ), strict=True)
        grids = np.meshgrid(*axes, indexing="ij")
        self.nodes = np.stack([g.ravel() for g in grids], axis=1)
        log_w = sum(np.meshgrid(*[np.log(w) for w in weights], indexing="ij"))
        self.half = half
        self.points_per_axis = points

        losses = np.asarray(lossfn(self.nodes), dtype=np.float64).reshape(-1)
        if losses.shape[0] != self.nodes.shape[0]:
            raise ValueError("batched loss returned the wrong number of values")
        if np.isnan(losses).any():
            raise QuadratureDegeneracyError("loss is NaN on the quadrature box")
        self.losses = losses
        self._base = -losses + np.asarray(log_w).ravel()
        edge_idx = [np.isin(np.arange(points), (0, points - 1))] * dim
        self._edge = np.any(np.stack([m.ravel() for m in np.meshgrid(*edge_idx, indexing="ij")]), axis=0)
        log.debug("quadrature_built", dim=dim, nodes=len(self.nodes), half=half, rule=self.spec.rule.value)

    @property
    def dim(self) -> int:
        return self.center.size

    def _weights(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        sq = np.sum((self.nodes - theta) ** 2, axis=1)
        logits = self._base - 0.5 * self.gamma * sq
        log_z = float(logsumexp(logits))
        if not np.isfinite(log_z):
            raise QuadratureDegeneracyError(
                "Gibbs integral underflowed on every node; increase half_width "
                f"(currently {self.spec.half_width})"
            )
        return log_z, np.exp(logits - log_z)

    def evaluate(
        self, theta: np.ndarray, want: Collection[EntropyPiece] = ALL_PIECES
    ) -> EntropyEvaluation:
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        if theta.size != self.dim:
            raise ValueError(f"theta has dim {theta.size}, quadrature has {self.dim}")
        unknown = set(want) - set(ALL_PIECES)
        if unknown:
            raise ValueError(f"unknown local-entropy pieces: {sorted(unknown)}")

        log_z, p = self._weights(theta)
        edge_mass = float(p[self._edge].sum())
        if edge_mass > _EDGE_MASS_WARN:
            log.warning("quadrature_edge_mass", edge_mass=edge_mass, theta=theta.tolist())

        mean = p @ self.nodes
        centred = self.nodes - mean
        cov = (centred * p[:, None]).T @ centred
        cov = 0.5 * (cov + cov.T)

        hessian = None
        if "hessian" in want:
            hessian = self.gamma * np.eye(self.dim) - self.gamma**2 * cov
        return EntropyEvaluation(
            theta=theta,
            value=-log_z if "value" in want else None,
            gradient=self.gamma * (theta - mean) if "gradient" in want else None,
            hessian=hessian,
            mean=mean,
            covariance=cov,
        )

    def value(self, theta: np.ndarray) -> float:
        return -self._weights(np.atleast_1d(np.asarray(theta, dtype=np.float64)))[0]

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        _, p = self._weights(theta)
        return self.gamma * (theta - p @ self.nodes)


def local_entropy_exact(
    lossfn: BatchLoss,
    theta: np.ndarray,
    gamma: float,
    quad: QuadratureSpec | None = None,
    want: Collection[EntropyPiece] = ALL_PIECES,
    center: np.ndarray | None = None,
) -> EntropyEvaluation:
    """-F(theta) and its derivatives on a box centred at *center* (default theta)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    anchor = theta if center is None else center
    return GibbsQuadrature(lossfn, gamma, anchor, quad).evaluate(theta, want)
