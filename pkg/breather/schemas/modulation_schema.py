from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from breather.utils.errors import DomainError


class KinematicsSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    a: float
    a_t: float
    a_tt: float
    b: float
    b_t: float
    b_tt: float
    c: float
    c_t: float
    tau: float
    rho: float


class NonlinearitySpec(BaseModel):
    """Autonomous coefficients G_{2n+1}, keyed by order n (1 = cubic, 2 = quintic, ...)."""

    model_config = ConfigDict(frozen=True)

    coefficients: Dict[int, float] = Field(default_factory=lambda: {1: -1.0})

    @model_validator(mode="after")
    def check_orders(self):
        if not self.coefficients:
            raise DomainError("nonlinearity needs at least one coefficient")
        if any(n < 1 for n in self.coefficients):
            raise DomainError(f"nonlinearity orders start at 1, got {sorted(self.coefficients)}")
        return self

    @property
    def order(self) -> int:
        return max(self.coefficients)

    @property
    def G3(self) -> Optional[float]:
        return self.coefficients.get(1)


class PotentialCoefficients(BaseModel):
    """V(x, t) = f1 x^2 + f2 x + f3."""

    model_config = ConfigDict(frozen=True)

    f1: float
    f2: float
    f3: float

    def evaluate(self, x):
        return self.f1 * x ** 2 + self.f2 * x + self.f3


class ConsistencyResiduals(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_tau: float
    r_eta: float
    r_rho: float

    @property
    def max_abs(self) -> float:
        return max(abs(self.r_tau), abs(self.r_eta), abs(self.r_rho))

    def flagged(self, tol: float = 1e-6) -> bool:
        return self.max_abs > tol
