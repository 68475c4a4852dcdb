import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from breather.utils.errors import DomainError


class SpatialGrid(BaseModel):
    """Uniform 1D grid; x_k = x_min + k*dx."""

    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    n_points: int = Field(..., ge=3)

    @model_validator(mode="after")
    def check_bounds(self):
        if not self.x_min < self.x_max:
            raise DomainError(f"grid requires x_min < x_max, got [{self.x_min}, {self.x_max}]")
        return self

    @classmethod
    def from_box(cls, half_width: float, dx: float) -> "SpatialGrid":
        """Symmetric box [-half_width, half_width] with spacing as close to dx as the box allows."""
        if half_width <= 0 or dx <= 0:
            raise DomainError(f"box half-width and dx must be positive, got {half_width}, {dx}")
        n_points = int(round(2.0 * half_width / dx)) + 1
        return cls(x_min=-half_width, x_max=half_width, n_points=max(n_points, 3))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_points) * self.dx


class WaveField(BaseModel):
    """Complex samples of psi (or Phi) on a SpatialGrid. Read-only once built."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: SpatialGrid
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def as_complex_array(cls, value):
        arr = np.array(value, dtype=np.complex128)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_samples(self):
        if self.amplitudes.ndim != 1 or self.amplitudes.size != self.grid.n_points:
            raise DomainError(
                f"amplitude count {self.amplitudes.size} does not match n_points {self.grid.n_points}"
            )
        if not np.all(np.isfinite(self.amplitudes)):
            raise DomainError("wave field contains non-finite amplitudes")
        return self

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes: np.ndarray) -> "WaveField":
        return WaveField(grid=self.grid, amplitudes=amplitudes)


class TimeSeries(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    values: np.ndarray
    name: str = "value"

    @field_validator("times", "values", mode="before")
    @classmethod
    def as_float_array(cls, value):
        arr = np.array(value, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_series(self):
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise DomainError(
                f"times and values must be 1D with equal lengths, got {self.times.shape} and {self.values.shape}"
            )
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise DomainError("time series requires strictly increasing times")
        return self

    def __len__(self) -> int:
        return int(self.times.size)

    def shifted(self, dt: float) -> "TimeSeries":
        return TimeSeries(times=self.times + dt, values=self.values, name=self.name)

    def scaled(self, factor: float) -> "TimeSeries":
        return TimeSeries(times=self.times, values=self.values * factor, name=self.name)


class Moments(BaseModel):
    norm: float
    center_of_mass: float
    rms_width: float
