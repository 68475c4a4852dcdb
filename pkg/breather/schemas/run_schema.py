from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from breather.utils.enums import LinearSolver, ModelKind, SplittingScheme


class RunConfig(BaseModel):
    """One CLI invocation: a scenario plus per-run overrides."""

    model_config = ConfigDict(frozen=True)

    scenario: str
    dt: Optional[float] = Field(None, gt=0)
    dx: Optional[float] = Field(None, gt=0)
    box: Optional[float] = Field(None, gt=0)
    horizon: Optional[float] = Field(None, gt=0)
    perturb: float = Field(0.0, ge=0)
    seeds: List[int] = Field(default_factory=lambda: [0])
    snapshot_stride: Optional[int] = Field(None, ge=1)
    compare: Optional[ModelKind] = None
    out: Optional[str] = None
    jobs: int = Field(1, ge=1)
    field_every: int = Field(0, ge=0)
    scale: Optional[float] = Field(None, gt=0)
    splitting: SplittingScheme = SplittingScheme.strang
    linear_solver: LinearSolver = LinearSolver.banded

    @field_validator("seeds")
    @classmethod
    def at_least_one_seed(cls, value):
        if not value:
            return [0]
        return value
