import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from breather.config import settings
from breather.utils.enums import BoundaryPolicy, LinearSolver, SplittingScheme
from breather.utils.errors import DomainError


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: float = Field(default_factory=lambda: settings.DEFAULT_DT, gt=0)
    boundary: BoundaryPolicy = BoundaryPolicy.dirichlet
    splitting: SplittingScheme = SplittingScheme.strang
    linear_solver: LinearSolver = LinearSolver.banded
    snapshot_stride: int = Field(default_factory=lambda: settings.SNAPSHOT_STRIDE, ge=1)
    blowup_growth: float = Field(default_factory=lambda: settings.BLOWUP_GROWTH, gt=1)
    check_every: int = Field(default_factory=lambda: settings.BLOWUP_CHECK_EVERY, ge=1)


class TridiagonalSystem(BaseModel):
    """lower[k] multiplies x[k-1], upper[k] multiplies x[k+1]; lower[0] and upper[-1] are ignored."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lower: np.ndarray
    diagonal: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    @field_validator("lower", "diagonal", "upper", "rhs", mode="before")
    @classmethod
    def as_complex_array(cls, value):
        return np.atleast_1d(np.array(value, dtype=np.complex128))

    @model_validator(mode="after")
    def check_lengths(self):
        n = self.diagonal.size
        if n < 1:
            raise DomainError("tridiagonal system needs at least one unknown")
        if not (self.lower.size == self.upper.size == self.rhs.size == n):
            raise DomainError(
                f"inconsistent band lengths: lower={self.lower.size}, diagonal={n}, "
                f"upper={self.upper.size}, rhs={self.rhs.size}"
            )
        return self

    def dense(self) -> np.ndarray:
        n = self.diagonal.size
        matrix = np.diag(self.diagonal).astype(np.complex128)
        if n > 1:
            matrix += np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)
        return matrix
