"""
Split-step integrator for

    i psi_t = -psi_xx / 2 + V(x, t) psi + P(|psi|^2) psi

The dispersive part is advanced by Crank-Nicolson on the 3-point Laplacian
with homogeneous Dirichlet ends; V + P is a pointwise phase rotation, exact
because |psi| is constant along that sub-flow.
"""

from typing import Callable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import solve_banded
from tqdm import tqdm

from breather.config import settings
from breather.schemas.field_schema import SpatialGrid, WaveField
from breather.schemas.modulation_schema import NonlinearitySpec
from breather.schemas.solver_schema import SolverConfig, TridiagonalSystem
from breather.services.modulation import ModulationPlan, coefficients_from
from breather.utils.enums import LinearSolver, NonlinearKind, SplittingScheme
from breather.utils.errors import BlowUpError, DomainError, NonpolynomialDomainError, SingularSystemError
from breather.utils.logger import setup_logger

logger = setup_logger(__name__)

Observer = Callable[[float, WaveField], None]
PotentialFunction = Callable[[np.ndarray, float], np.ndarray]


# =============================================================================
# TRIDIAGONAL SOLVE
# =============================================================================

def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """
    Solve a tridiagonal system with the Thomas algorithm (no pivoting).

    Raises:
        SingularSystemError: a zero pivot appears during elimination
    """
    a, c = system.lower, system.upper
    b = system.diagonal.copy()
    d = system.rhs.copy()
    n = d.size

    if b[0] == 0:
        raise SingularSystemError("zero pivot at row 0")
    for k in range(1, n):
        m = a[k] / b[k - 1]
        b[k] = b[k] - m * c[k - 1]
        d[k] = d[k] - m * d[k - 1]
        if b[k] == 0:
            raise SingularSystemError(f"zero pivot at row {k}")

    x = np.empty(n, dtype=np.complex128)
    x[-1] = d[-1] / b[-1]
    for k in range(n - 2, -1, -1):
        x[k] = (d[k] - c[k] * x[k + 1]) / b[k]
    return x


class CrankNicolsonStepper:
    """
    (I + i dt/2 H) psi' = (I - i dt/2 H) psi with H = -(1/2) D2 on the interior
    points; D2 is the (1, -2, 1)/dx^2 stencil and both end values stay zero.
    The band matrix is built once per (grid, dt).
    """

    def __init__(self, grid: SpatialGrid, dt: float, solver: LinearSolver = LinearSolver.banded):
        self.grid = grid
        self.dt = dt
        self.solver = solver
        m = grid.n_points - 2
        self.r = 1j * dt / (4.0 * grid.dx ** 2)

        self._lower = np.full(m, -self.r, dtype=np.complex128)
        self._diagonal = np.full(m, 1.0 + 2.0 * self.r, dtype=np.complex128)
        self._upper = np.full(m, -self.r, dtype=np.complex128)
        self._lower[0] = 0.0
        self._upper[-1] = 0.0

        self._bands = np.zeros((3, m), dtype=np.complex128)
        self._bands[0, 1:] = -self.r
        self._bands[1, :] = 1.0 + 2.0 * self.r
        self._bands[2, :-1] = -self.r

    def rhs(self, psi: np.ndarray) -> np.ndarray:
        inner = psi[1:-1]
        out = (1.0 - 2.0 * self.r) * inner
        out[1:] += self.r * inner[:-1]
        out[:-1] += self.r * inner[1:]
        return out

    def step(self, psi: np.ndarray) -> np.ndarray:
        rhs = self.rhs(psi)
        if self.solver is LinearSolver.thomas:
            inner = thomas_solve(TridiagonalSystem(
                lower=self._lower, diagonal=self._diagonal, upper=self._upper, rhs=rhs
            ))
        else:
            try:
                inner = solve_banded((1, 1), self._bands, rhs, check_finite=False)
            except np.linalg.LinAlgError as e:
                raise SingularSystemError(f"Crank-Nicolson band solve failed: {e}")
        out = np.zeros_like(psi)
        out[1:-1] = inner
        return out


def linear_half_step(field: WaveField, dt: float, solver: LinearSolver = LinearSolver.banded) -> WaveField:
    """Crank-Nicolson step of i psi_t = -psi_xx / 2 for duration dt."""
    stepper = CrankNicolsonStepper(field.grid, dt, solver)
    return field.with_amplitudes(stepper.step(np.asarray(field.amplitudes)))


# =============================================================================
# NONLINEAR MODEL AND PHASE STEP
# =============================================================================

def npse_factor(u):
    """(1 + 3u/2) / sqrt(1 + u) with u = g |psi|^2."""
    return (1.0 + 1.5 * u) / np.sqrt(1.0 + u)


class NonlinearModel(BaseModel):
    """
    Polynomial: P = sum_n g_{2n+1}(t) |psi|^{2n}, `coefficients(t)` returning
    {n: g_{2n+1}}. Nonpolynomial: P = npse_factor(g(x, t) |psi|^2) with
    g(x, t) = strength(t) * profile(x).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: NonlinearKind
    coefficients: Optional[Callable[[float], dict]] = None
    strength: Optional[Callable[[float], float]] = None
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def model_post_init(self, __context):
        if self.kind is NonlinearKind.polynomial and self.coefficients is None:
            raise DomainError("polynomial model needs coefficients(t)")
        if self.kind is NonlinearKind.nonpolynomial and self.strength is None:
            raise DomainError("nonpolynomial model needs strength(t)")

    @classmethod
    def cubic(cls, g: float) -> "NonlinearModel":
        return cls(kind=NonlinearKind.polynomial, coefficients=lambda t: {1: g})

    @classmethod
    def from_modulation(cls, spec: NonlinearitySpec, plan: ModulationPlan) -> "NonlinearModel":
        """g_{2i+1}(t) = G_{2i+1} a(t)^{2-i}."""
        def coefficients(t):
            a = float(plan.evaluate(t).a)
            return {order: G * a ** (2 - order) for order, G in spec.coefficients.items()}
        return cls(kind=NonlinearKind.polynomial, coefficients=coefficients)

    @classmethod
    def nonpolynomial(cls, strength: Union[float, Callable[[float], float]],
                      profile: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> "NonlinearModel":
        fn = strength if callable(strength) else (lambda t, g=float(strength): g)
        return cls(kind=NonlinearKind.nonpolynomial, strength=fn, profile=profile)

    def coupling(self, x: np.ndarray, t: float):
        g = self.strength(t)
        return g * self.profile(x) if self.profile is not None else g

    def term(self, density: np.ndarray, x: np.ndarray, t: float) -> np.ndarray:
        """P(|psi|^2) at every grid point."""
        if self.kind is NonlinearKind.polynomial:
            total = np.zeros_like(density)
            for order, g in self.coefficients(t).items():
                total += g * density ** order
            return total

        u = self.coupling(x, t) * density
        if np.any(1.0 + u <= 0):
            raise NonpolynomialDomainError(
                f"1 + g|psi|^2 <= 0 at t={t:.6g} (min {float(np.min(1.0 + u)):.3e})"
            )
        return npse_factor(u)


def _phase_rotate(psi: np.ndarray, potential: np.ndarray, model: NonlinearModel,
                  x: np.ndarray, t: float, dt: float) -> np.ndarray:
    density = np.abs(psi) ** 2
    return psi * np.exp(-1j * (potential + model.term(density, x, t)) * dt)


def nonlinear_phase_step(field: WaveField, V_values: np.ndarray, model: NonlinearModel,
                         t: float, dt: float) -> WaveField:
    """psi_k -> psi_k exp(-i (V_k + P(|psi_k|^2)) dt)."""
    psi = _phase_rotate(np.asarray(field.amplitudes), np.asarray(V_values, dtype=np.float64),
                        model, field.grid.x, t, dt)
    return field.with_amplitudes(psi)


# =============================================================================
# POTENTIALS
# =============================================================================

class QuadraticPotential:
    """V(x, t) = scale * (f1(t) x^2 + f2(t) x + f3(t)) from a modulation plan."""

    def __init__(self, plan: ModulationPlan, scale: float = 1.0):
        self.plan = plan
        self.scale = scale

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        f1, f2, f3 = coefficients_from(self.plan.evaluate(t))
        return self.scale * ((float(f1) * x + float(f2)) * x + float(f3))


def zero_potential(x: np.ndarray, t: float) -> np.ndarray:
    return np.zeros_like(x)


def constant_potential(value: float) -> PotentialFunction:
    def potential(x, t):
        return np.full_like(x, value)
    return potential


# =============================================================================
# PROPAGATION
# =============================================================================

class PropagationResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    field: WaveField
    t_final: float
    steps: int
    dt: float
    initial_norm: float
    final_norm: float

    @property
    def norm_drift(self) -> float:
        return abs(self.final_norm - self.initial_norm) / self.initial_norm


def _discrete_norm(psi: np.ndarray, dx: float) -> float:
    # trapezoid with zero end values
    return float(np.sum(np.abs(psi) ** 2) * dx)


def propagate(field: WaveField,
              potential: Union[ModulationPlan, PotentialFunction, None],
              model: NonlinearModel,
              config: SolverConfig,
              t0: float,
              t1: float,
              observers: Sequence[Observer] = (),
              label: str = "run") -> PropagationResult:
    """
    Advance `field` from t0 to t1.

    Strang step: half phase rotation with V, g at t, full Crank-Nicolson step,
    half phase rotation with V, g at t + dt. Lie step: full rotation at t then
    the linear step. The step count is round((t1 - t0) / dt) and the step is
    adjusted so the run ends exactly at t1. Observers get (t, field) at t0 and
    every `snapshot_stride` steps.

    Raises:
        BlowUpError: non-finite amplitudes or norm growth beyond `blowup_growth`
    """
    if not t1 > t0:
        raise DomainError(f"propagation needs t1 > t0, got t0={t0}, t1={t1}")
    if isinstance(potential, ModulationPlan):
        potential = QuadraticPotential(potential)
    elif potential is None:
        potential = zero_potential

    grid = field.grid
    x = grid.x
    steps = max(int(round((t1 - t0) / config.dt)), 1)
    dt = (t1 - t0) / steps
    if abs(dt - config.dt) > 1e-12 * config.dt:
        logger.info(f"[{label}] dt adjusted from {config.dt:.6g} to {dt:.6g} to land on t1={t1:.6g}")

    stepper = CrankNicolsonStepper(grid, dt, config.linear_solver)
    psi = np.array(field.amplitudes, dtype=np.complex128)
    psi[0] = psi[-1] = 0.0
    initial_norm = _discrete_norm(psi, grid.dx)
    if not initial_norm > 0:
        raise DomainError(f"[{label}] initial field has zero norm")

    logger.info(
        f"[{label}] Propagating t={t0:.6g}..{t1:.6g}: {steps} steps of dt={dt:.3g}, "
        f"{grid.n_points} points on [{grid.x_min:.4g}, {grid.x_max:.4g}], {config.splitting.value} splitting"
    )

    def check(psi, t):
        norm = _discrete_norm(psi, grid.dx)
        if not np.isfinite(norm) or not np.all(np.isfinite(psi)):
            logger.error(f"[{label}] Non-finite amplitudes at t={t:.6g}")
            raise BlowUpError(f"non-finite amplitudes at t={t:.6g}", t=t)
        if norm > config.blowup_growth * initial_norm:
            logger.error(f"[{label}] Norm grew {norm / initial_norm:.3g}x by t={t:.6g}")
            raise BlowUpError(f"norm grew {norm / initial_norm:.3g}x by t={t:.6g}", t=t)

    def notify(psi, t):
        snapshot = WaveField(grid=grid, amplitudes=psi)
        for observer in observers:
            observer(t, snapshot)

    if observers:
        notify(psi, t0)

    strang = config.splitting is SplittingScheme.strang
    progress = tqdm(range(1, steps + 1), desc=label, disable=not settings.SHOW_PROGRESS, mininterval=1.0)
    for n in progress:
        t = t0 + (n - 1) * dt
        t_next = t0 + n * dt
        if strang:
            psi = _phase_rotate(psi, potential(x, t), model, x, t, 0.5 * dt)
            psi = stepper.step(psi)
            psi = _phase_rotate(psi, potential(x, t_next), model, x, t_next, 0.5 * dt)
        else:
            psi = _phase_rotate(psi, potential(x, t), model, x, t, dt)
            psi = stepper.step(psi)

        if n % config.check_every == 0 or n == steps:
            check(psi, t_next)
        if observers and n % config.snapshot_stride == 0:
            check(psi, t_next)
            notify(psi, t_next)

    final_norm = _discrete_norm(psi, grid.dx)
    logger.info(
        f"[{label}] Done at t={t1:.6g}; relative norm drift {abs(final_norm - initial_norm) / initial_norm:.3e}"
    )
    return PropagationResult(
        field=WaveField(grid=grid, amplitudes=psi),
        t_final=t1,
        steps=steps,
        dt=dt,
        initial_norm=initial_norm,
        final_norm=final_norm,
    )
