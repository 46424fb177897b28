"""
Empirical Lipschitz ratios over sampled parameter pairs.

    sup  ||f(theta_1) - f(theta_2)|| / ||theta_1 - theta_2||

taken over pairs drawn uniformly from a Region's box and filtered by its
predicate. Pairs closer than `min_separation` are discarded: at tiny
separations the ratio measures rounding, not smoothness. The result is an
empirical supremum (a lower estimate of the true constant), never a
certified bound.

Straddling-pair families put the two members of each pair on opposite sides
of a coordinate hyperplane. They witness ratios that blow up as the pair
shrinks (non-Lipschitz maps) and check that smoothed objectives stay
bounded across the same kink.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
import structlog

from src.concurrency import ordered_map
from src.config import settings
from src.exceptions import EmptyRegionError
from src.models import LipschitzEstimate, Region

log = structlog.get_logger(__name__)

VectorMap = Callable[[np.ndarray], np.ndarray | float]

_DRAW_FACTOR = 50


def sample_pairs(
    region: Region,
    n_pairs: int,
    min_sep: float,
    rng: np.random.Generator,
    local_radius: float | None = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw up to n_pairs admissible pairs.

    With `local_radius` the second member is theta_1 plus a uniform offset in
    a cube of that half-width, which probes local curvature instead of
    long-range slopes.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if region.diameter < min_sep:
        raise EmptyRegionError(
            f"region diameter {region.diameter:.3g} is below min_separation {min_sep:.3g}"
        )
    lo, hi = np.asarray(region.lo), np.asarray(region.hi)
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    budget = _DRAW_FACTOR * n_pairs + 1000
    for _ in range(budget):
        first = rng.uniform(lo, hi)
        if local_radius is None:
            second = rng.uniform(lo, hi)
        else:
            second = first + rng.uniform(-local_radius, local_radius, size=first.size)
        if np.linalg.norm(first - second) < min_sep:
            continue
        if not (region.contains(first) and region.contains(second)):
            continue
        pairs.append((first, second))
        if len(pairs) == n_pairs:
            break
    if not pairs:
        raise EmptyRegionError(f"no admissible pair found in {budget} draws")
    if len(pairs) < n_pairs:
        log.warning("pair_budget_exhausted", wanted=n_pairs, found=len(pairs))
    return pairs


def _ratio(fn: VectorMap, pair: tuple[np.ndarray, np.ndarray]) -> float:
    a, b = pair
    diff = np.atleast_1d(np.asarray(fn(a), dtype=np.float64) - np.asarray(fn(b), dtype=np.float64))
    return float(np.linalg.norm(diff) / np.linalg.norm(a - b))


def pair_family_ratios(
    fn: VectorMap, pairs: Sequence[tuple[np.ndarray, np.ndarray]], workers: int | None = None
) -> list[float]:
    return ordered_map(lambda pair: _ratio(fn, pair), pairs, workers)


def lipschitz_ratio_estimate(
    fn: VectorMap,
    region: Region,
    n_pairs: int,
    min_sep: float | None = None,
    seed: int = 0,
    local_radius: float | None = None,
    pairs: Sequence[tuple[np.ndarray, np.ndarray]] | None = None,
) -> LipschitzEstimate:
    """Sup ratio of *fn* over pairs sampled from *region* (or over explicit *pairs*)."""
    min_sep = settings.min_separation if min_sep is None else min_sep
    if pairs is None:
        pairs = sample_pairs(region, n_pairs, min_sep, np.random.default_rng(seed), local_radius)
    else:
        pairs = [p for p in pairs if np.linalg.norm(p[0] - p[1]) >= min_sep]
        if not pairs:
            raise EmptyRegionError("every supplied pair is closer than min_separation")
    ratios = pair_family_ratios(fn, pairs)
    best = int(np.argmax(ratios))
    log.debug("lipschitz_estimate", pairs=len(pairs), sup_ratio=ratios[best])
    return LipschitzEstimate(
        sup_ratio=ratios[best],
        pair_count=len(pairs),
        argmax_pair=pairs[best],
        min_separation=min_sep,
    )


def straddling_pairs(
    center: np.ndarray, axis: int, separations: Sequence[float]
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairs center +/- (s/2) e_axis, one per separation s."""
    center = np.asarray(center, dtype=np.float64)
    pairs = []
    for s in separations:
        offset = np.zeros_like(center)
        offset[axis] = 0.5 * s
        pairs.append((center + offset, center - offset))
    return pairs


def decade_growth(ratios: Sequence[float]) -> list[float]:
    """Ratio of consecutive entries, for families ordered by shrinking separation."""
    return [ratios[k + 1] / ratios[k] if ratios[k] > 0 else np.inf
            for k in range(len(ratios) - 1)]
