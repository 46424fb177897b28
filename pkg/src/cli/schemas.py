"""
JSON job documents, one per subcommand.

Every document carries `schema_version` (currently 1) and all the numerics
of the run; command-line flags only choose the subcommand, paths, seed and
verbosity. `train` reads an ExperimentConfig directly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, TypeVar

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.exceptions import ConfigError
from src.models import (
    DatasetSpec,
    LabeledDataset,
    LossVariant,
    ModelKind,
    ModelSpec,
    NormBall,
    PgdConfig,
    QuadratureSpec,
    Region,
)
from src.training.dataset import make_synthetic_dataset
from src.verification.checks import SUITES

JobT = TypeVar("JobT", bound=BaseModel)


class ExampleSet(BaseModel):
    """Explicit examples; the default is the single two-parameter reference point."""

    inputs: list[list[float]] = Field(default_factory=lambda: [[-1.0, 1.0]])
    labels: list[float] = Field(default_factory=lambda: [1.0])


class DataSource(BaseModel):
    """Either explicit `examples` or the `synthetic` train split, never both."""

    examples: ExampleSet | None = None
    synthetic: DatasetSpec | None = None

    @model_validator(mode="after")
    def _one_source(self) -> DataSource:
        if self.examples is not None and self.synthetic is not None:
            raise ValueError("give either examples or synthetic, not both")
        if self.examples is None and self.synthetic is None:
            self.examples = ExampleSet()
        return self

    def load(self) -> LabeledDataset:
        if self.synthetic is not None:
            spec = self.synthetic
            return make_synthetic_dataset(spec.n, spec.d, spec.seed)[0]
        return LabeledDataset(inputs=self.examples.inputs, labels=self.examples.labels)


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------


class SurfaceRequest(BaseModel):
    model: ModelSpec = Field(default_factory=ModelSpec)
    variant: LossVariant = LossVariant.CLEAN
    entropy: bool = False
    gamma: float = Field(default=0.03, gt=0)
    name: str | None = None

    @property
    def stem(self) -> str:
        if self.name:
            return self.name
        stem = f"{self.model.kind.value}_{self.variant.value}"
        return f"{stem}_entropy" if self.entropy else stem


class SliceRequest(BaseModel):
    model: ModelSpec = Field(default_factory=lambda: ModelSpec(kind=ModelKind.MLP, hidden=[4]))
    init_seed: int = 0
    # None slices around the model's initial parameters
    theta_star: list[float] | None = None
    n_directions: int = Field(default=1, ge=1)
    alphas: list[float] | None = None
    ball: NormBall = Field(default_factory=lambda: NormBall(epsilon=0.05))
    pgd: PgdConfig = Field(default_factory=lambda: PgdConfig(steps=10, step_size=0.0125))


class SurfaceJob(BaseModel):
    schema_version: Literal[1] = 1
    data: DataSource = Field(default_factory=DataSource)
    epsilon: float = Field(default=0.6, ge=0)
    theta1_range: tuple[float, float] = (-2.0, 2.0)
    theta2_range: tuple[float, float] = (-2.0, 2.0)
    resolution: int = Field(default=81, ge=2)
    surfaces: list[SurfaceRequest] = Field(min_length=1)
    # None uses the surface defaults (settings.surface_pgd_*)
    pgd: PgdConfig | None = None
    quadrature: QuadratureSpec | None = None
    format: Literal["csv", "json"] = "csv"
    slices: list[SliceRequest] = Field(default_factory=list)
    seed: int = 0

    @model_validator(mode="after")
    def _unique_stems(self) -> SurfaceJob:
        stems = [s.stem for s in self.surfaces]
        if len(stems) != len(set(stems)):
            raise ValueError("surfaces must have distinct names")
        return self


# ---------------------------------------------------------------------------
# probe
# ---------------------------------------------------------------------------


class CurvatureRequest(BaseModel):
    """Interior-curvature constant c at one theta for one example."""

    theta: list[float]
    example: int = Field(default=0, ge=0)
    ball: NormBall = Field(default_factory=lambda: NormBall(epsilon=0.6))


class SharpnessRequest(BaseModel):
    theta: list[float]
    radius: float = Field(gt=0)
    restarts: int = Field(default=8, ge=0)


class ProbeJob(BaseModel):
    schema_version: Literal[1] = 1
    model: ModelSpec = Field(default_factory=ModelSpec)
    init_seed: int = 0
    region: Region = Field(default_factory=lambda: Region.square(2.0))
    data: DataSource = Field(default_factory=DataSource)
    input_radius: float = Field(default=0.6, ge=0)
    n_pairs: int | None = Field(default=None, ge=1)
    curvature: CurvatureRequest | None = None
    sharpness: SharpnessRequest | None = None
    seed: int = 0

    @model_validator(mode="after")
    def _dims(self) -> ProbeJob:
        for name in ("curvature", "sharpness"):
            request = getattr(self, name)
            if request is not None and not request.theta:
                raise ValueError(f"{name}.theta must not be empty")
        return self


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


class EntropyJob(BaseModel):
    schema_version: Literal[1] = 1
    # "quadratic" is the closed-form oracle L(theta') = ||theta'||^2 / 2
    objective: Literal["model", "quadratic"] = "model"
    model: ModelSpec = Field(default_factory=ModelSpec)
    data: DataSource = Field(default_factory=DataSource)
    variant: LossVariant = LossVariant.ADV_LINF
    epsilon: float = Field(default=0.6, ge=0)
    gamma: float = Field(default=0.03, gt=0)
    thetas: list[list[float]] = Field(min_length=1)
    quadrature: QuadratureSpec | None = None
    pgd: PgdConfig | None = None
    seed: int = 0

    @field_validator("thetas")
    @classmethod
    def _uniform(cls, value: list[list[float]]) -> list[list[float]]:
        if len({len(t) for t in value}) != 1 or not value[0]:
            raise ValueError("every theta must have the same non-zero length")
        return value

    def theta_array(self) -> np.ndarray:
        return np.asarray(self.thetas, dtype=np.float64)


# ---------------------------------------------------------------------------
# verify-lemmas
# ---------------------------------------------------------------------------


class VerifyJob(BaseModel):
    schema_version: Literal[1] = 1
    suites: list[str] = Field(default_factory=lambda: ["attacks", "probes", "entropy"])
    only: list[str] | None = None
    seed: int = 0

    @field_validator("suites")
    @classmethod
    def _known(cls, value: list[str]) -> list[str]:
        unknown = [s for s in value if s not in SUITES]
        if unknown:
            raise ValueError(f"unknown suites {unknown}; known: {sorted(SUITES)}")
        return value


def load_job(path: str | Path | None, schema: type[JobT]) -> JobT:
    """Parse *path* into *schema*. pydantic ValidationError propagates as is."""
    if path is None:
        raise ConfigError("--config is required for this subcommand")
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return schema.model_validate(payload)
