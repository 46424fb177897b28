"""
Shared Pydantic data models used across every layer of the lab.

numpy arrays travel through the `FloatArray` annotated type: it validates
from anything `np.asarray` accepts and serializes back to nested lists, so
every record round-trips through JSON unchanged.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    field_validator,
    model_validator,
)

from src.config import settings


def _to_array(value: Any) -> np.ndarray | None:
    if value is None:
        return None
    return np.array(value, dtype=np.float64)


def _to_list(value: np.ndarray | None) -> list | None:
    if value is None:
        return None
    return np.asarray(value, dtype=np.float64).tolist()


FloatArray = Annotated[
    np.ndarray,
    PlainValidator(_to_array),
    PlainSerializer(_to_list),
]


class LabModel(BaseModel):
    """Base for records that carry numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True)


# ---------------------------------------------------------------------------
# Models and data
# ---------------------------------------------------------------------------


class ModelKind(str, Enum):
    LINEAR_LOGISTIC = "linear_logistic"
    SWISH_LOGISTIC = "swish_logistic"
    MLP = "mlp"


class Activation(str, Enum):
    SWISH = "swish"
    RELU = "relu"


class ModelSpec(BaseModel):
    """Which toy model to build. Width checks happen in make_model."""

    kind: ModelKind = ModelKind.LINEAR_LOGISTIC
    input_dim: int = 2
    # Mlp only: hidden layer widths between the input and the scalar output
    hidden: list[int] = Field(default_factory=list)
    activation: Activation = Activation.SWISH

    @property
    def widths(self) -> list[int]:
        return [self.input_dim, *self.hidden, 1]


class LabeledDataset(LabModel):
    """N inputs of uniform dimension d with labels in {-1, +1}."""

    inputs: FloatArray
    labels: FloatArray

    @model_validator(mode="after")
    def _check_shapes(self) -> LabeledDataset:
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValueError("inputs must be a non-empty N x d matrix")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels must be a vector with one entry per input")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs must be finite")
        return self

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, indices: np.ndarray | list[int]) -> LabeledDataset:
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(inputs=self.inputs[idx], labels=self.labels[idx])


# ---------------------------------------------------------------------------
# Attacks
# ---------------------------------------------------------------------------


class Norm(str, Enum):
    L2 = "2"
    LINF = "inf"

    @property
    def order(self) -> float:
        return 2.0 if self is Norm.L2 else math.inf

    @property
    def dual_order(self) -> float:
        # q with 1/p + 1/q = 1
        return 2.0 if self is Norm.L2 else 1.0


class NormBall(BaseModel):
    """Feasible region {delta : ||delta||_p <= epsilon}."""

    p: Norm = Norm.LINF
    epsilon: float = Field(default=0.0, ge=0)

    @field_validator("p", mode="before")
    @classmethod
    def _coerce_p(cls, value: Any) -> Any:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            if value == 2:
                return Norm.L2
            if math.isinf(value):
                return Norm.LINF
        if isinstance(value, str) and value.lower() in {"l2", "two"}:
            return Norm.L2
        if isinstance(value, str) and value.lower() in {"linf", "infinity"}:
            return Norm.LINF
        return value

    @field_validator("epsilon")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("epsilon must be finite")
        return value

    def norm(self, vector: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(vector, dtype=np.float64), ord=self.p.order))


class PgdConfig(BaseModel):
    steps: int = Field(default=10, ge=1)
    step_size: float = Field(default=0.15, gt=0)
    random_init: bool = False
    seed: int = 0


class AttackResult(LabModel):
    delta: FloatArray
    x_prime: FloatArray
    achieved_loss: float
    on_boundary: bool
    # Set when the maximizer direction is undefined (theta = 0, theta_i = 0, zero gradient)
    degenerate: bool = False
    iterations: int = 0


# ---------------------------------------------------------------------------
# Smoothness probes
# ---------------------------------------------------------------------------


class PredicateKind(str, Enum):
    NONE = "none"
    NORM_AT_LEAST = "norm_at_least"
    FIXED_ORTHANT = "fixed_orthant"


class Region(BaseModel):
    """Axis-aligned box over theta with an optional admissibility predicate."""

    lo: list[float]
    hi: list[float]
    predicate: PredicateKind = PredicateKind.NONE
    theta_min: float | None = None
    signs: list[int] | None = None

    @model_validator(mode="after")
    def _check(self) -> Region:
        if not self.lo or len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must be non-empty and of equal length")
        if any(lo > hi for lo, hi in zip(self.lo, self.hi)):
            raise ValueError("lo must not exceed hi on any coordinate")
        if self.predicate is PredicateKind.NORM_AT_LEAST:
            if self.theta_min is None or self.theta_min <= 0:
                raise ValueError("norm_at_least needs theta_min > 0")
        if self.predicate is PredicateKind.FIXED_ORTHANT:
            if self.signs is None or len(self.signs) != len(self.lo):
                raise ValueError("fixed_orthant needs one sign per coordinate")
            if any(s not in (-1, 1) for s in self.signs):
                raise ValueError("orthant signs must be -1 or +1")
        return self

    @classmethod
    def square(cls, half: float, dim: int = 2, **kwargs: Any) -> Region:
        return cls(lo=[-half] * dim, hi=[half] * dim, **kwargs)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    def contains(self, theta: np.ndarray) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        if np.any(theta < np.asarray(self.lo)) or np.any(theta > np.asarray(self.hi)):
            return False
        if self.predicate is PredicateKind.NORM_AT_LEAST:
            return bool(np.linalg.norm(theta) >= self.theta_min)
        if self.predicate is PredicateKind.FIXED_ORTHANT:
            return bool(np.all(np.asarray(self.signs) * theta > 0))
        return True


class LipschitzEstimate(LabModel):
    sup_ratio: float
    pair_count: int
    argmax_pair: tuple[FloatArray, FloatArray] | None = None
    min_separation: float


class ProbeReport(BaseModel):
    """Empirical regularity constants plus optional curvature diagnostics."""

    c_theta: float
    c_theta_theta: float
    c_theta_x: float
    curvature_c: float | None = None
    sigma1: float | None = None
    eps_sharpness: float | None = None
    region: dict[str, Any]
    input_radius: float
    seed: int
    sample_counts: dict[str, int]
    # Estimates are empirical suprema over sampled pairs, not certified bounds
    estimator: str = "empirical_sup"

    @model_validator(mode="after")
    def _non_negative(self) -> ProbeReport:
        for name in ("c_theta", "c_theta_theta", "c_theta_x", "curvature_c", "sigma1",
                     "eps_sharpness"):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value < 0):
                raise ValueError(f"{name} must be finite and non-negative")
        return self


class InteriorCheck(BaseModel):
    is_stationary: bool
    max_eig: float
    c: float
    strictly_interior: bool
    grad_norm: float
    distance: float


class BorderedHessianCheck(LabModel):
    mu: float
    matrix: FloatArray
    determinant: float
    min_singular_value: float
    stationarity_residual: float


class ImplicitCase(str, Enum):
    INTERIOR = "interior"
    BOUNDARY_L2 = "boundary_l2"


class ImplicitJacobian(LabModel):
    """D_theta x' with columns dx'/dtheta_j."""

    case: ImplicitCase
    jacobian: FloatArray
    spectral_norm: float
    rank: int
    determinant: float


class SpectralNormEstimate(BaseModel):
    value: float
    iterations: int
    converged: bool


class SharpnessEstimate(BaseModel):
    exact: float
    approximation: float
    spectral_norm: float
    base_loss: float
    radius: float


# ---------------------------------------------------------------------------
# EntropySGD
# ---------------------------------------------------------------------------


class UpdateOrder(str, Enum):
    FIRST = "first"
    SECOND = "second"


class EnsgdConfig(BaseModel):
    gamma: float = Field(default=0.03, gt=0)
    eta: float = Field(default=0.1, gt=0)
    eta_prime: float = Field(default=0.1, gt=0)
    eps_langevin: float = Field(default=1e-4, ge=0)
    langevin_iters: int = Field(default=20, ge=1)
    alpha: float = Field(default=0.75, gt=0, le=1)
    order: UpdateOrder = UpdateOrder.FIRST
    variance_floor: float = Field(default_factory=lambda: settings.variance_floor, gt=0, lt=1)


class EnsgdState(LabModel):
    theta_bar: FloatArray
    xi_bar: FloatArray
    steps_taken: int = 0
    minibatches: int = 0

    def variance(self) -> np.ndarray:
        """Per-coordinate variance estimate, clamped at zero."""
        return np.maximum(self.xi_bar - self.theta_bar**2, 0.0)


class AwpConfig(BaseModel):
    gamma_a: float = Field(default=0.01, ge=0)
    inner_steps: int = Field(default=1, ge=1)
    # Ascent step relative to the block radius gamma_a * ||theta_l||
    step_size: float = Field(default=1.0, gt=0)

    @field_validator("gamma_a")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("gamma_a must be finite")
        return value


class QuadratureRule(str, Enum):
    MIDPOINT = "midpoint"
    GAUSS_LEGENDRE = "gauss_legendre"


class QuadratureSpec(BaseModel):
    half_width: float = Field(default_factory=lambda: settings.quadrature_half_width, gt=0)
    points_per_axis: int = Field(default_factory=lambda: settings.quadrature_points, ge=16)
    rule: QuadratureRule = Field(default_factory=lambda: QuadratureRule(settings.quadrature_rule))
    # Gauss-Legendre nodes per composite panel
    panel_order: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def _check_panels(self) -> QuadratureSpec:
        if self.rule is QuadratureRule.GAUSS_LEGENDRE and self.points_per_axis % self.panel_order:
            raise ValueError("points_per_axis must be a multiple of panel_order")
        return self


class EntropyEvaluation(LabModel):
    """Local-entropy pieces at one theta. Unrequested pieces stay None."""

    theta: FloatArray
    value: float | None = None
    gradient: FloatArray | None = None
    hessian: FloatArray | None = None
    mean: FloatArray
    covariance: FloatArray


# ---------------------------------------------------------------------------
# Surfaces
# ---------------------------------------------------------------------------


class LossVariant(str, Enum):
    CLEAN = "clean"
    ADV_L2 = "adv_l2"
    ADV_LINF = "adv_linf"
    ADV_L2_PGD = "adv_l2_pgd"
    ADV_LINF_PGD = "adv_linf_pgd"

    @property
    def norm(self) -> Norm | None:
        if self in (LossVariant.ADV_L2, LossVariant.ADV_L2_PGD):
            return Norm.L2
        if self in (LossVariant.ADV_LINF, LossVariant.ADV_LINF_PGD):
            return Norm.LINF
        return None

    @property
    def uses_pgd(self) -> bool:
        return self in (LossVariant.ADV_L2_PGD, LossVariant.ADV_LINF_PGD)


class GridSpec(BaseModel):
    theta1_range: tuple[float, float] = (-2.0, 2.0)
    theta2_range: tuple[float, float] = (-2.0, 2.0)
    resolution: int = Field(default=81, ge=2)
    variant: LossVariant = LossVariant.CLEAN
    # Plot -F of the variant instead of the variant itself
    entropy: bool = False

    @model_validator(mode="after")
    def _check_ranges(self) -> GridSpec:
        for lo, hi in (self.theta1_range, self.theta2_range):
            if not lo < hi:
                raise ValueError("axis ranges need lo < hi")
        return self

    @property
    def label(self) -> str:
        return f"entropy_of({self.variant.value})" if self.entropy else self.variant.value

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(*self.theta1_range, self.resolution),
            np.linspace(*self.theta2_range, self.resolution),
        )


class DiscontinuityMark(BaseModel):
    """A node where the slope along one grid axis jumps."""

    i: int
    j: int
    theta1: float
    theta2: float
    axis: int  # 0: jump along theta1, 1: jump along theta2
    jump: float


class SurfaceGrid(LabModel):
    """values[i, j] is the loss at (theta1_axis[i], theta2_axis[j])."""

    spec: GridSpec
    values: FloatArray
    grad_norms: FloatArray | None = None
    discontinuities: list[DiscontinuityMark] = Field(default_factory=list)
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_values(self) -> SurfaceGrid:
        shape = (self.spec.resolution, self.spec.resolution)
        if self.values.shape != shape:
            raise ValueError(f"values must have shape {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface values must be finite")
        if self.grad_norms is not None and self.grad_norms.shape != shape:
            raise ValueError(f"grad_norms must have shape {shape}")
        return self


class SliceCurve(BaseModel):
    direction: int
    alphas: list[float]
    losses: list[float]


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


class DatasetSpec(BaseModel):
    n: int = Field(default=200, ge=2)
    d: int = Field(default=2, ge=1)
    seed: int = 0


class LrSchedule(BaseModel):
    """Step decay: multiply by `decay` once for every milestone already passed."""

    initial: float = Field(default=0.1, ge=0)
    decay: float = Field(default=0.1, gt=0)
    milestones: list[int] = Field(default_factory=lambda: [30, 40])

    @field_validator("milestones")
    @classmethod
    def _sorted(cls, value: list[int]) -> list[int]:
        if value != sorted(value):
            raise ValueError("milestones must be sorted ascending")
        return value

    def factor(self, epoch: int) -> float:
        """Decay multiplier in force during 1-based `epoch`."""
        passed = sum(1 for m in self.milestones if epoch > m)
        return self.decay**passed

    def lr_at(self, epoch: int) -> float:
        return self.initial * self.factor(epoch)


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ENSGD = "ensgd"
    ENSGD2 = "ensgd2"


class StoppingMetric(str, Enum):
    TEST_ROBUST_ACCURACY = "test_robust_accuracy"
    TEST_CLEAN_ACCURACY = "test_clean_accuracy"


class ExperimentConfig(BaseModel):
    schema_version: Literal[1] = 1
    name: str = "desk"
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    model: ModelSpec = Field(default_factory=ModelSpec)
    ball: NormBall = Field(default_factory=lambda: NormBall(p=Norm.LINF, epsilon=0.05))
    pgd_train: PgdConfig = Field(default_factory=lambda: PgdConfig(steps=10, step_size=0.0125))
    pgd_eval: PgdConfig = Field(default_factory=lambda: PgdConfig(steps=20, step_size=0.0125))
    optimizer: OptimizerKind = OptimizerKind.SGD
    ensgd: EnsgdConfig = Field(default_factory=EnsgdConfig)
    awp: AwpConfig | None = None
    epochs: int = Field(default=50, ge=1)
    batch_size: int = Field(default=20, ge=1)
    lr_schedule: LrSchedule = Field(default_factory=LrSchedule)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    weight_decay: float = Field(default=5e-4, ge=0)
    early_stopping: StoppingMetric = StoppingMetric.TEST_ROBUST_ACCURACY
    init_seed: int = 0
    seed: int = 0


class EpochRecord(BaseModel):
    epoch: int
    lr: float
    train_robust_loss: float
    train_robust_accuracy: float = Field(ge=0, le=1)
    test_robust_accuracy: float = Field(ge=0, le=1)
    test_clean_accuracy: float = Field(ge=0, le=1)
    wall_time: float
    outer_steps: int
    minibatches: int


class Checkpoint(LabModel):
    theta: FloatArray
    epoch: int
    config_hash: str


class AbortRecord(LabModel):
    epoch: int
    batch_id: int
    theta: FloatArray
    message: str


class TrainingRun(LabModel):
    config: ExperimentConfig
    records: list[EpochRecord] = Field(default_factory=list)
    best: Checkpoint | None = None
    final_theta: FloatArray
    aborted: AbortRecord | None = None

    @property
    def completed(self) -> bool:
        return self.aborted is None


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


class CheckResult(BaseModel):
    name: str
    suite: str
    passed: bool
    measured: float
    bound: float
    tolerance: float
    seed: int
    seconds: float
    detail: str = ""
