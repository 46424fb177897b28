"""
Loss surfaces over a 2-D parameter grid.

values[i, j] is the loss at (theta1_axis[i], theta2_axis[j]). Raw surfaces
evaluate a SurfaceLoss at every node; entropy surfaces evaluate -F through a
single GibbsQuadrature anchored at the grid centre and widened to cover the
whole grid, so every node sees the same node set and -F is an exactly smooth
function of theta.

Slope jumps
    Along each grid line the one-sided slopes left and right of a node differ
    by D = (v[k+1] - 2 v[k] + v[k-1]) / h. On a smooth surface D is about
    h * curvature and changes slowly from node to node; across a kink it is
    O(1). A node is flagged when |D| exceeds `factor` times both the grid
    median of |D| and the larger |D| of its two neighbours on the same line.
"""

from __future__ import annotations

import time
from typing import Any

import numpy as np
import structlog

from src.concurrency import ordered_map
from src.config import settings
from src.entropy.quadrature import BatchLoss, GibbsQuadrature
from src.models import DiscontinuityMark, GridSpec, QuadratureSpec, SurfaceGrid
from src.surface.losses import SurfaceLoss

log = structlog.get_logger(__name__)

# Slope jumps below this (relative to the surface scale) are rounding
_JUMP_FLOOR = 1e-8


def _node_thetas(spec: GridSpec) -> np.ndarray:
    a1, a2 = spec.axes()
    g1, g2 = np.meshgrid(a1, a2, indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], axis=1)


def gradient_norms(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Finite-difference gradient norm field of a grid."""
    a1, a2 = spec.axes()
    d1, d2 = np.gradient(values, a1, a2)
    return np.hypot(d1, d2)


def slope_jumps(values: np.ndarray, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Slope jump fields along theta1 (axis 0) and theta2 (axis 1); NaN on the border."""
    a1, a2 = spec.axes()
    h1, h2 = a1[1] - a1[0], a2[1] - a2[0]
    jump1 = np.full(values.shape, np.nan)
    jump2 = np.full(values.shape, np.nan)
    jump1[1:-1, :] = (values[2:, :] - 2 * values[1:-1, :] + values[:-2, :]) / h1
    jump2[:, 1:-1] = (values[:, 2:] - 2 * values[:, 1:-1] + values[:, :-2]) / h2
    return jump1, jump2


def detect_discontinuities(
    values: np.ndarray, spec: GridSpec, factor: float | None = None
) -> list[DiscontinuityMark]:
    factor = settings.discontinuity_factor if factor is None else factor
    a1, a2 = spec.axes()
    jumps = slope_jumps(values, spec)
    all_abs = np.abs(np.concatenate([j[np.isfinite(j)] for j in jumps]))
    if all_abs.size == 0:
        return []
    median = float(np.median(all_abs))
    floor = _JUMP_FLOOR * max(1.0, float(np.abs(values).max())) / min(a1[1] - a1[0], a2[1] - a2[0])

    marks: list[DiscontinuityMark] = []
    for axis, jump in enumerate(jumps):
        mag = np.abs(jump)
        # Neighbours along the same grid line; border neighbours count as zero
        padded = np.pad(np.nan_to_num(mag), [(1, 1), (0, 0)] if axis == 0 else [(0, 0), (1, 1)])
        if axis == 0:
            neighbours = np.maximum(padded[:-2, :], padded[2:, :])
        else:
            neighbours = np.maximum(padded[:, :-2], padded[:, 2:])
        with np.errstate(invalid="ignore"):
            flagged = (mag > factor * median) & (mag > factor * neighbours) & (mag > floor)
        for i, j in zip(*np.nonzero(flagged), strict=True):
            marks.append(DiscontinuityMark(
                i=int(i), j=int(j), theta1=float(a1[i]), theta2=float(a2[j]),
                axis=axis, jump=float(jump[i, j]),
            ))
    marks.sort(key=lambda m: (m.i, m.j, m.axis))
    return marks


def sample_surface(
    lossfn: SurfaceLoss | BatchLoss,
    spec: GridSpec,
    metadata: dict[str, Any] | None = None,
    workers: int | None = None,
) -> SurfaceGrid:
    """Evaluate *lossfn* on every grid node, then mark slope jumps."""
    started = time.perf_counter()
    thetas = _node_thetas(spec)
    if isinstance(lossfn, SurfaceLoss) and lossfn.variant.uses_pgd:
        flat = lossfn(thetas)
    else:
        # Rows are independent; chunk them so thread pools see several tasks
        chunks = np.array_split(thetas, max(1, min(len(thetas), 4 * (workers or settings.max_workers))))
        flat = np.concatenate(ordered_map(lossfn, chunks, workers))
    values = np.asarray(flat, dtype=np.float64).reshape(spec.resolution, spec.resolution)

    meta = dict(metadata or {})
    if isinstance(lossfn, SurfaceLoss):
        meta.update(lossfn.metadata())
    marks = detect_discontinuities(values, spec)
    log.info(
        "surface_sampled",
        variant=spec.label,
        nodes=values.size,
        discontinuities=len(marks),
        seconds=round(time.perf_counter() - started, 3),
    )
    return SurfaceGrid(
        spec=spec,
        values=values,
        grad_norms=gradient_norms(values, spec),
        discontinuities=marks,
        metadata=meta,
    )


def grid_quadrature(
    lossfn: BatchLoss, spec: GridSpec, gamma: float, quad: QuadratureSpec | None = None
) -> GibbsQuadrature:
    """One quadrature box covering the Gaussian factor of every grid node."""
    center = np.array([np.mean(spec.theta1_range), np.mean(spec.theta2_range)])
    extent = 0.5 * max(spec.theta1_range[1] - spec.theta1_range[0],
                       spec.theta2_range[1] - spec.theta2_range[0])
    return GibbsQuadrature(lossfn, gamma, center, quad, extent=extent)


def sample_entropy_surface(
    lossfn: BatchLoss,
    spec: GridSpec,
    gamma: float,
    quad: QuadratureSpec | None = None,
    metadata: dict[str, Any] | None = None,
    workers: int | None = None,
) -> SurfaceGrid:
    """-F at every node; grad_norms hold the exact ||gamma (theta - E[theta'])||."""
    started = time.perf_counter()
    quadrature = grid_quadrature(lossfn, spec, gamma, quad)
    thetas = _node_thetas(spec)

    def node(theta: np.ndarray) -> tuple[float, float]:
        ev = quadrature.evaluate(theta, want=("value", "gradient"))
        return float(ev.value), float(np.linalg.norm(ev.gradient))

    results = ordered_map(node, list(thetas), workers)
    shape = (spec.resolution, spec.resolution)
    values = np.array([r[0] for r in results]).reshape(shape)
    grads = np.array([r[1] for r in results]).reshape(shape)

    meta = dict(metadata or {})
    if isinstance(lossfn, SurfaceLoss):
        meta.update(lossfn.metadata())
    meta.update({
        "gamma": gamma,
        "quadrature": quadrature.spec.model_dump(mode="json"),
        "quadrature_points_per_axis": quadrature.points_per_axis,
        "quadrature_half_box": quadrature.half,
    })
    marks = detect_discontinuities(values, spec)
    log.info(
        "entropy_surface_sampled",
        variant=spec.label,
        gamma=gamma,
        nodes=values.size,
        discontinuities=len(marks),
        seconds=round(time.perf_counter() - started, 3),
    )
    return SurfaceGrid(spec=spec, values=values, grad_norms=grads, discontinuities=marks, metadata=meta)


def argmin_shift_cells(a: SurfaceGrid, b: SurfaceGrid) -> int:
    """Chebyshev distance, in grid cells, between the argmins of two same-shape grids."""
    if a.values.shape != b.values.shape:
        raise ValueError("grids must share a shape")
    ia = np.unravel_index(int(np.argmin(a.values)), a.values.shape)
    ib = np.unravel_index(int(np.argmin(b.values)), b.values.shape)
    return int(max(abs(ia[0] - ib[0]), abs(ia[1] - ib[1])))
