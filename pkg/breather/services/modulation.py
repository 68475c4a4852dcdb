"""
Ansatz kinematics for psi(x, t) = rho(t) exp(i eta(x, t)) Phi(zeta(x, t), tau(t)).

With zeta = a(t) x + b(t) the constraint system gives tau_t = a^2, rho = sqrt(a),
eta = -(a_t / 2a) x^2 - (b_t / a) x + c(t), and the potential
V = f1 x^2 + f2 x + f3 with

    f1 = a_tt / 2a - a_t^2 / a^2
    f2 = b_tt / a - 2 a_t b_t / a^2
    f3 = -c_t - b_t^2 / 2a^2

Nonlinear strengths map as g_{2i+1}(t) = G_{2i+1} a^{2-i}.
"""

import threading
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline

from breather.config import settings
from breather.schemas.modulation_schema import (
    ConsistencyResiduals,
    KinematicsSample,
    NonlinearitySpec,
    PotentialCoefficients,
)
from breather.utils.enums import CPolicy
from breather.utils.errors import DomainError
from breather.utils.logger import setup_logger

logger = setup_logger(__name__)

TimeFunction = Callable[[np.ndarray], np.ndarray]

FIRST_DERIVATIVE_STEP = 1e-6
SECOND_DERIVATIVE_STEP = 1e-3
RESIDUAL_STEP = 1e-5


def constant(value: float) -> TimeFunction:
    """Vectorized constant time-function."""
    def fn(t):
        return np.full_like(np.asarray(t, dtype=np.float64), value, dtype=np.float64)
    return fn


def first_derivative(f: TimeFunction, t, h: float = FIRST_DERIVATIVE_STEP):
    """Central difference with one Richardson extrapolation."""
    t = np.asarray(t, dtype=np.float64)
    coarse = (f(t + h) - f(t - h)) / (2.0 * h)
    fine = (f(t + h / 2) - f(t - h / 2)) / h
    return (4.0 * fine - coarse) / 3.0


def second_derivative(f: TimeFunction, t, h: float = SECOND_DERIVATIVE_STEP):
    t = np.asarray(t, dtype=np.float64)
    f0 = f(t)
    coarse = (f(t + h) - 2.0 * f0 + f(t - h)) / h ** 2
    fine = (f(t + h / 2) - 2.0 * f0 + f(t - h / 2)) / (h / 2) ** 2
    return (4.0 * fine - coarse) / 3.0


class CumulativeIntegral:
    """
    t -> integral_0^t f(s) ds from a cumulative trapezoid table on a uniform
    symmetric node set, interpolated by a cubic Hermite spline whose node slopes
    are the integrand itself. The table grows on demand; growth is serialized.
    """

    def __init__(self, integrand: TimeFunction, step: float):
        self._integrand = integrand
        self._step = step
        self._lock = threading.Lock()
        self._reach = 0.0
        self._spline = None

    def _extend(self, reach: float):
        with self._lock:
            if reach <= self._reach and self._spline is not None:
                return
            target = max(reach, 2.0 * self._reach, 16.0 * self._step)
            n = int(np.ceil(target / self._step))
            nodes = np.arange(-n, n + 1) * self._step
            values = np.asarray(self._integrand(nodes), dtype=np.float64)
            table = cumulative_trapezoid(values, nodes, initial=0.0)
            table -= table[n]
            self._spline = CubicHermiteSpline(nodes, table, values)
            self._reach = n * self._step
            logger.debug(f"Quadrature table extended to |t| <= {self._reach:.4g} ({nodes.size} nodes)")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        reach = float(np.max(np.abs(t))) if t.size else 0.0
        if self._spline is None or reach > self._reach:
            self._extend(reach)
        return self._spline(t)


class Kinematics(NamedTuple):
    """Vectorized kinematics; every entry has the shape of the queried t."""

    t: np.ndarray
    a: np.ndarray
    a_t: np.ndarray
    a_tt: np.ndarray
    b: np.ndarray
    b_t: np.ndarray
    b_tt: np.ndarray
    c: np.ndarray
    c_t: np.ndarray
    tau: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(self.a)


class ModulationPlan(BaseModel):
    """
    The functions a(t), b(t) and the c-policy of one modulation.

    Derivatives left as None fall back to Richardson-extrapolated central
    differences. tau and c left as None are integrated numerically.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = "custom"
    a: TimeFunction
    b: TimeFunction = Field(default_factory=lambda: constant(0.0))
    a_t: Optional[TimeFunction] = None
    a_tt: Optional[TimeFunction] = None
    b_t: Optional[TimeFunction] = None
    b_tt: Optional[TimeFunction] = None
    c_policy: CPolicy = CPolicy.zero
    c: Optional[TimeFunction] = None
    c_t: Optional[TimeFunction] = None
    tau: Optional[TimeFunction] = None
    quadrature_step: float = Field(default_factory=lambda: settings.QUADRATURE_STEP, gt=0)

    _tau_integral: Optional[CumulativeIntegral] = PrivateAttr(default=None)
    _c_integral: Optional[CumulativeIntegral] = PrivateAttr(default=None)

    def model_post_init(self, __context):
        if self.c_policy is CPolicy.explicit and self.c is None:
            raise DomainError(f"plan '{self.name}': explicit c-policy needs a c(t) function")
        if self.tau is None:
            self._tau_integral = CumulativeIntegral(lambda s: self.a(s) ** 2, self.quadrature_step)
        if self.c_policy is CPolicy.quadrature_f3_zero and self.c is None:
            self._c_integral = CumulativeIntegral(self._c_t_f3_zero, self.quadrature_step)

    def with_overrides(self, **changes) -> "ModulationPlan":
        """New plan with some functions replaced; quadrature tables are rebuilt."""
        data = {name: getattr(self, name) for name in type(self).model_fields}
        data.update(changes)
        return type(self)(**data)

    @property
    def closed_form(self) -> bool:
        return all(fn is not None for fn in (self.a_t, self.a_tt, self.b_t, self.b_tt))

    # --- derivative providers ------------------------------------------------

    def _a_t(self, t):
        return self.a_t(t) if self.a_t is not None else first_derivative(self.a, t)

    def _a_tt(self, t):
        return self.a_tt(t) if self.a_tt is not None else second_derivative(self.a, t)

    def _b_t(self, t):
        return self.b_t(t) if self.b_t is not None else first_derivative(self.b, t)

    def _b_tt(self, t):
        return self.b_tt(t) if self.b_tt is not None else second_derivative(self.b, t)

    def _c_t_f3_zero(self, t):
        return -self._b_t(t) ** 2 / (2.0 * self.a(t) ** 2)

    def _tau(self, t):
        return self.tau(t) if self.tau is not None else self._tau_integral(t)

    def _c_and_c_t(self, t):
        if self.c_policy is CPolicy.zero:
            zero = np.zeros_like(t)
            return zero, zero
        if self.c_policy is CPolicy.quadrature_f3_zero:
            c_t = self._c_t_f3_zero(t)
            c = self.c(t) if self.c is not None else self._c_integral(t)
            return c, c_t
        c_t = self.c_t(t) if self.c_t is not None else first_derivative(self.c, t)
        return self.c(t), c_t

    # --- evaluation ----------------------------------------------------------

    def evaluate(self, t) -> Kinematics:
        """Kinematics at scalar or array t. Raises DomainError where a(t) <= 0."""
        t = np.asarray(t, dtype=np.float64)
        a = np.asarray(self.a(t), dtype=np.float64)
        if np.any(~(a > 0)):
            bad = t[~(a > 0)] if t.ndim else t
            raise DomainError(f"plan '{self.name}': a(t) must be positive, violated at t={np.ravel(bad)[:3]}")
        c, c_t = self._c_and_c_t(t)
        return Kinematics(
            t=t,
            a=a,
            a_t=np.asarray(self._a_t(t), dtype=np.float64),
            a_tt=np.asarray(self._a_tt(t), dtype=np.float64),
            b=np.asarray(self.b(t), dtype=np.float64),
            b_t=np.asarray(self._b_t(t), dtype=np.float64),
            b_tt=np.asarray(self._b_tt(t), dtype=np.float64),
            c=np.asarray(c, dtype=np.float64),
            c_t=np.asarray(c_t, dtype=np.float64),
            tau=np.asarray(self._tau(t), dtype=np.float64),
        )


def identity_plan() -> ModulationPlan:
    """a = 1, b = 0, c = 0: psi coincides with Phi."""
    return ModulationPlan(
        name="identity",
        a=constant(1.0),
        a_t=constant(0.0),
        a_tt=constant(0.0),
        b_t=constant(0.0),
        b_tt=constant(0.0),
        tau=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
    )


def kinematics(plan: ModulationPlan, t: float) -> KinematicsSample:
    k = plan.evaluate(float(t))
    return KinematicsSample(
        t=float(t),
        a=float(k.a),
        a_t=float(k.a_t),
        a_tt=float(k.a_tt),
        b=float(k.b),
        b_t=float(k.b_t),
        b_tt=float(k.b_tt),
        c=float(k.c),
        c_t=float(k.c_t),
        tau=float(k.tau),
        rho=float(np.sqrt(k.a)),
    )


def phase(k: Kinematics, x):
    """eta(x, t) for already evaluated kinematics (broadcasts x against t)."""
    return -(k.a_t / (2.0 * k.a)) * x ** 2 - (k.b_t / k.a) * x + k.c


def eta(plan: ModulationPlan, x, t: float):
    """Quadratic phase of the Ansatz; float for scalar x, array for array x."""
    value = phase(plan.evaluate(float(t)), np.asarray(x, dtype=np.float64))
    return float(value) if np.ndim(value) == 0 else value


def coefficients_from(k: Kinematics):
    """(f1, f2, f3) arrays from evaluated kinematics."""
    f1 = k.a_tt / (2.0 * k.a) - k.a_t ** 2 / k.a ** 2
    f2 = k.b_tt / k.a - 2.0 * k.a_t * k.b_t / k.a ** 2
    f3 = -k.c_t - k.b_t ** 2 / (2.0 * k.a ** 2)
    return f1, f2, f3


def potential_coefficients(plan: ModulationPlan, t: float) -> PotentialCoefficients:
    f1, f2, f3 = coefficients_from(plan.evaluate(float(t)))
    return PotentialCoefficients(f1=float(f1), f2=float(f2), f3=float(f3))


def nonlinear_strengths(spec: NonlinearitySpec, plan: ModulationPlan, t) -> Dict[int, np.ndarray]:
    """g_{2i+1}(t) = G_{2i+1} a(t)^{2-i} for every order i present in the spec."""
    a = plan.evaluate(t).a
    return {order: G * a ** (2 - order) for order, G in sorted(spec.coefficients.items())}


def cubic_strength(spec: NonlinearitySpec, plan: ModulationPlan, t: float) -> float:
    if spec.G3 is None:
        raise DomainError("nonlinearity spec has no cubic coefficient G3")
    return float(spec.G3 * plan.evaluate(float(t)).a)


def consistency_residuals(plan: ModulationPlan, t: float, x_probe: float,
                          h: float = RESIDUAL_STEP) -> ConsistencyResiduals:
    """
    Check the constraint system by central differences in t:

        r_tau = tau_t - zeta_x^2
        r_eta = eta_x + zeta_t / zeta_x
        r_rho = rho_t + rho eta_xx / 2

    eta_x and eta_xx come from the plan's derivative provider, so a wrong
    closed-form a_t or b_t shows up in r_eta and r_rho.
    """
    t = float(t)
    k = plan.evaluate(t)
    k_plus = plan.evaluate(t + h)
    k_minus = plan.evaluate(t - h)

    tau_t = (k_plus.tau - k_minus.tau) / (2.0 * h)
    zeta_t = ((k_plus.a - k_minus.a) * x_probe + (k_plus.b - k_minus.b)) / (2.0 * h)
    rho_t = (np.sqrt(k_plus.a) - np.sqrt(k_minus.a)) / (2.0 * h)

    eta_x = -(k.a_t / k.a) * x_probe - k.b_t / k.a
    eta_xx = -k.a_t / k.a

    return ConsistencyResiduals(
        r_tau=float(tau_t - k.a ** 2),
        r_eta=float(eta_x + zeta_t / k.a),
        r_rho=float(rho_t + np.sqrt(k.a) * eta_xx / 2.0),
    )
