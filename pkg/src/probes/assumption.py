"""
Empirical estimates of the loss regularity constants

    |l(x, theta_1) - l(x, theta_2)|                 <= C_theta   ||theta_1 - theta_2||
    ||grad_theta l(x, theta_1) - grad_theta l(x, theta_2)|| <= C_thth ||theta_1 - theta_2||
    ||grad_theta l(x_1, theta) - grad_theta l(x_2, theta)|| <= C_thx  ||x_1 - x_2||

with x ranging over the box of half-width `input_radius` around each data
point (the set adversarial examples live in) and theta over a Region.

Sampling mixes long-range pairs with short local pairs so that both the
global slope and the local curvature are seen, and every theta pair is
scored against a shared set of inputs that includes the box vertices, where
the suprema of these single-index models sit.
"""

from __future__ import annotations

import itertools

import numpy as np
import structlog

from src.config import settings
from src.exceptions import EmptyRegionError
from src.model_core.base import DifferentiableModel
from src.models import LabeledDataset, ProbeReport, Region
from src.probes.lipschitz import sample_pairs

log = structlog.get_logger(__name__)

_MAX_CANDIDATES = 512
_X_PAIRS_PER_THETA = 16
_LOCAL_RADIUS_FRACTION = 0.02


def input_candidates(
    dataset: LabeledDataset, radius: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Data points, their box vertices and a few interior draws, with labels."""
    X, y = dataset.inputs, dataset.labels
    d = dataset.input_dim
    rows, labels = [X], [y]
    if radius > 0:
        if d <= 4:
            for signs in itertools.product((-1.0, 1.0), repeat=d):
                rows.append(X + radius * np.asarray(signs))
                labels.append(y)
        for _ in range(2):
            rows.append(X + rng.uniform(-radius, radius, size=X.shape))
            labels.append(y)
    cand_x, cand_y = np.concatenate(rows), np.concatenate(labels)
    if len(cand_x) > _MAX_CANDIDATES:
        keep = np.sort(rng.choice(len(cand_x), size=_MAX_CANDIDATES, replace=False))
        cand_x, cand_y = cand_x[keep], cand_y[keep]
    return cand_x, cand_y


def _theta_pairs(region: Region, n_pairs: int, min_sep: float, rng: np.random.Generator):
    n_local = n_pairs // 2
    pairs = sample_pairs(region, n_pairs - n_local, min_sep, rng)
    if n_local:
        radius = max(_LOCAL_RADIUS_FRACTION * region.diameter, 2 * min_sep)
        pairs += sample_pairs(region, n_local, min_sep, rng, local_radius=radius)
    return pairs


def _x_pairs(
    dataset: LabeledDataset, radius: float, count: int, min_sep: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """`count` pairs inside one data point's box: half vertex-to-anywhere, half local."""
    d = dataset.input_dim
    idx = rng.integers(0, len(dataset), size=count)
    base = dataset.inputs[idx]
    first = base + radius * rng.choice((-1.0, 1.0), size=(count, d))
    half = count // 2
    second = np.empty_like(first)
    second[:half] = base[:half] + rng.uniform(-radius, radius, size=(half, d))
    local = _LOCAL_RADIUS_FRACTION * 2 * radius
    second[half:] = np.clip(
        first[half:] + rng.uniform(-local, local, size=(count - half, d)),
        base[half:] - radius,
        base[half:] + radius,
    )
    keep = np.linalg.norm(first - second, axis=1) >= min_sep
    return first[keep], second[keep], dataset.labels[idx][keep]


def estimate_assumption1_constants(
    model: DifferentiableModel,
    region: Region,
    dataset: LabeledDataset,
    n_pairs: int | None = None,
    seed: int = 0,
    input_radius: float = 0.0,
    min_sep: float | None = None,
) -> ProbeReport:
    """Empirical sup estimates of C_theta, C_thth and C_thx on *region*."""
    n_pairs = settings.probe_pairs if n_pairs is None else n_pairs
    min_sep = settings.min_separation if min_sep is None else min_sep
    rng = np.random.default_rng(seed)

    pairs = _theta_pairs(region, n_pairs, min_sep, rng)
    cand_x, cand_y = input_candidates(dataset, input_radius, rng)

    c_theta = 0.0
    c_thth = 0.0
    c_thx = 0.0
    x_pair_count = 0
    for theta_1, theta_2 in pairs:
        dist = float(np.linalg.norm(theta_1 - theta_2))
        loss_1, grad_1, _ = model.batch_grads(theta_1, cand_x, cand_y)
        loss_2, grad_2, _ = model.batch_grads(theta_2, cand_x, cand_y)
        c_theta = max(c_theta, float(np.max(np.abs(loss_1 - loss_2))) / dist)
        c_thth = max(c_thth, float(np.max(np.linalg.norm(grad_1 - grad_2, axis=1))) / dist)

        if input_radius > 0:
            x_1, x_2, labels = _x_pairs(dataset, input_radius, _X_PAIRS_PER_THETA, min_sep, rng)
            if len(x_1):
                _, gx_1, _ = model.batch_grads(theta_1, x_1, labels)
                _, gx_2, _ = model.batch_grads(theta_1, x_2, labels)
                ratios = (np.linalg.norm(gx_1 - gx_2, axis=1)
                          / np.linalg.norm(x_1 - x_2, axis=1))
                c_thx = max(c_thx, float(ratios.max()))
                x_pair_count += len(x_1)

    if input_radius > 0 and x_pair_count == 0:
        raise EmptyRegionError("input box too small for min_separation")

    log.info(
        "regularity_constants_estimated",
        c_theta=c_theta,
        c_theta_theta=c_thth,
        c_theta_x=c_thx,
        theta_pairs=len(pairs),
        x_pairs=x_pair_count,
    )
    return ProbeReport(
        c_theta=c_theta,
        c_theta_theta=c_thth,
        c_theta_x=c_thx,
        region=region.model_dump(mode="json"),
        input_radius=input_radius,
        seed=seed,
        sample_counts={
            "theta_pairs": len(pairs),
            "x_pairs": x_pair_count,
            "x_candidates": int(len(cand_x)),
        },
    )
