"""
Typed errors raised by the lab.

The CLI maps ConfigError (and pydantic ValidationError) to exit code 2 and
every other LabError to exit code 3.
"""

from __future__ import annotations


class LabError(Exception):
    """Root of every error the lab raises on purpose."""


class ConfigError(LabError):
    """An experiment config or invocation is malformed."""


class ModelSpecError(ConfigError):
    """A ModelSpec cannot be turned into a model (bad widths, unknown kind)."""


class NumericalOverflowError(LabError):
    """A loss or derivative evaluated to a non-finite value."""


class EmptyRegionError(LabError):
    """No admissible sample pair could be drawn from a probe region."""


class UndefinedNormalError(LabError):
    """The constraint normal (x' - x)/||x' - x|| is undefined because x' == x."""


class BoundaryPreconditionError(LabError):
    """An attack point expected on the L2 sphere lies off it."""


class SingularSystemError(LabError):
    """An implicit-function system is singular or inconsistent at this theta."""

    def __init__(self, message: str, determinant: float | None = None) -> None:
        super().__init__(message)
        self.determinant = determinant


class UnsupportedDimensionError(LabError):
    """A brute-force routine was asked to work beyond its dimension limit."""


class UnsupportedCombinationError(LabError):
    """The requested option pair has no implementation (e.g. closed form on an MLP)."""


class QuadratureDegeneracyError(LabError):
    """Every quadrature weight underflowed; widen the integration box."""


class ExportError(LabError):
    """Writing or reading an artifact failed."""

    def __init__(self, message: str, path: str) -> None:
        super().__init__(f"{message}: {path}")
        self.path = path


class TrainingAbortedError(LabError):
    """Training hit a non-finite loss. Carries the abort record."""

    def __init__(self, message: str, record: object | None = None) -> None:
        super().__init__(message)
        self.record = record
