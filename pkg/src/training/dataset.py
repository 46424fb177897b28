"""
Synthetic two-class data: x ~ N(0, I_d), y = sign(x_1).

Train and test come from one seeded stream of 2n draws (first n train, last
n test), so the splits are disjoint and fixed by the seed alone.
"""

from __future__ import annotations

import numpy as np
import structlog

from src.models import LabeledDataset

log = structlog.get_logger(__name__)


def make_synthetic_dataset(n: int, d: int = 2, seed: int = 0) -> tuple[LabeledDataset, LabeledDataset]:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2 * n, d))
    # sign(0) has no class; redraw those rows
    zero = X[:, 0] == 0.0
    while zero.any():
        X[zero] = rng.standard_normal((int(zero.sum()), d))
        zero = X[:, 0] == 0.0
    y = np.sign(X[:, 0])

    train = LabeledDataset(inputs=X[:n], labels=y[:n])
    test = LabeledDataset(inputs=X[n:], labels=y[n:])
    log.debug("synthetic_dataset", n=n, d=d, seed=seed, positives=int((y[:n] > 0).sum()))
    return train, test
