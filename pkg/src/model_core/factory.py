"""
Factory: `make_model()` turns a ModelSpec into a model with seeded initial
parameters -- a config change, not a code change.
"""

from __future__ import annotations

import numpy as np
import structlog

from src.exceptions import ModelSpecError
from src.model_core.base import DifferentiableModel
from src.model_core.linear import LinearLogistic, SwishLogistic
from src.model_core.mlp import Mlp
from src.models import ModelKind, ModelSpec

log = structlog.get_logger(__name__)


def _uniform_init(rng: np.random.Generator, size: int, fan_in: int) -> np.ndarray:
    return rng.uniform(-0.5, 0.5, size=size) / np.sqrt(fan_in)


def make_model(spec: ModelSpec, init_seed: int = 0) -> DifferentiableModel:
    """Build the model named by *spec* with parameters drawn from *init_seed*."""
    if spec.input_dim < 1:
        raise ModelSpecError(f"input_dim must be >= 1, got {spec.input_dim}")
    rng = np.random.default_rng(init_seed)

    if spec.kind in (ModelKind.LINEAR_LOGISTIC, ModelKind.SWISH_LOGISTIC):
        if spec.hidden:
            raise ModelSpecError(f"{spec.kind.value} takes no hidden widths")
        theta0 = _uniform_init(rng, spec.input_dim, spec.input_dim)
        cls = LinearLogistic if spec.kind is ModelKind.LINEAR_LOGISTIC else SwishLogistic
        model: DifferentiableModel = cls(spec, theta0)
    elif spec.kind is ModelKind.MLP:
        bad = [w for w in spec.hidden if w <= 0]
        if bad:
            raise ModelSpecError(f"hidden widths must be positive, got {spec.hidden}")
        widths = spec.widths
        pieces = []
        for n_in, n_out in zip(widths[:-1], widths[1:]):
            pieces.append(_uniform_init(rng, n_out * n_in, n_in))
            pieces.append(_uniform_init(rng, n_out, n_in))
        model = Mlp(spec, np.concatenate(pieces))
    else:  # pragma: no cover - enum is exhaustive
        raise ModelSpecError(f"unknown model kind {spec.kind!r}")

    log.debug("model_built", kind=spec.kind.value, param_dim=model.param_dim, seed=init_seed)
    return model
