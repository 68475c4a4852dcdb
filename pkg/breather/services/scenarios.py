"""
Catalog of named breather configurations.

Each entry bundles a modulation plan, the autonomous nonlinearity, grid and
step defaults, a horizon and the expected breathing metrics. Non-experimental
entries are checked against the modulated-GPE residual when built.
"""

from typing import Callable, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from breather.config import settings
from breather.schemas.field_schema import SpatialGrid, WaveField
from breather.schemas.modulation_schema import NonlinearitySpec
from breather.schemas.report_schema import ExpectedReport, Target
from breather.services.analytic import gpe_residual, modulated_psi
from breather.services.modulation import ModulationPlan, constant
from breather.services.propagator import NonlinearModel, QuadraticPotential
from breather.utils.enums import CPolicy, ModelKind
from breather.utils.errors import CatalogError, DomainError
from breather.utils.logger import setup_logger

logger = setup_logger(__name__)

PROBE_HALF_WIDTH = 12.0
PROBE_POINTS = 241
PROBE_TIMES = np.linspace(0.0, 5.0, 6)
SQRT2 = np.sqrt(2.0)


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    description: str = ""
    plan: ModulationPlan
    spec: NonlinearitySpec = Field(default_factory=NonlinearitySpec)
    model_kind: ModelKind = ModelKind.cubic
    box: float = Field(default_factory=lambda: settings.DEFAULT_BOX, gt=0)
    dx: float = Field(default_factory=lambda: settings.DEFAULT_DX, gt=0)
    dt: float = Field(default_factory=lambda: settings.DEFAULT_DT, gt=0)
    horizon: float = Field(8.0, gt=0)
    stability_horizon: float = Field(100.0, gt=0)
    stability_box: Optional[float] = Field(None, gt=0)
    expected: Optional[ExpectedReport] = None
    experimental: bool = False
    residual: Optional[float] = None

    def grid(self, box: Optional[float] = None, dx: Optional[float] = None) -> SpatialGrid:
        return SpatialGrid.from_box(box or self.box, dx or self.dx)

    def nonlinear_model(self) -> NonlinearModel:
        if self.model_kind is ModelKind.cubic:
            return NonlinearModel.from_modulation(self.spec, self.plan)
        G3 = self.spec.G3
        plan = self.plan
        return NonlinearModel.nonpolynomial(lambda t: G3 * float(plan.evaluate(t).a))

    def potential(self) -> QuadraticPotential:
        return QuadraticPotential(self.plan)

    def initial_field(self, grid: SpatialGrid) -> WaveField:
        return modulated_psi(self.plan, grid, 0.0)

    def analytic_field(self, grid: SpatialGrid, t: float) -> WaveField:
        return modulated_psi(self.plan, grid, t)

    def cubic_twin(self) -> "ScenarioSpec":
        """Same plan, grid and steps with the cubic model."""
        return self.model_copy(update={"name": f"{self.name}_cubic", "model_kind": ModelKind.cubic})


# =============================================================================
# EXPECTED METRICS
# =============================================================================

def _static_breathing() -> ExpectedReport:
    # max density 16(10 + 6cos4t)/(5 + 3cos4t)^2; its midpoint width is arccos(0.6)/2
    return ExpectedReport(targets={
        "period": Target(value=np.pi / 2, rel_tol=0.02),
        "frequency": Target(value=2.0 / np.pi, rel_tol=0.02),
        "amplitude_min": Target(value=4.0, rel_tol=0.02),
        "amplitude_max": Target(value=16.0, rel_tol=0.02),
        "fwhm_time": Target(value=float(np.arccos(0.6) / 2.0), rel_tol=0.10),
        "fwhm_space": Target(value=0.39, rel_tol=0.10),
    })


def _seesaw_breathing() -> ExpectedReport:
    # a = 1 leaves the trace of the static breather; only the reported spatial width differs
    targets = dict(_static_breathing().targets)
    targets["fwhm_space"] = Target(value=0.41, rel_tol=0.10)
    return ExpectedReport(targets=targets)


def _flying_breathing(fwhm_time: float) -> ExpectedReport:
    return ExpectedReport(targets={
        "period": Target(value=3.14, rel_tol=0.05),
        "frequency": Target(value=0.32, rel_tol=0.05),
        "peak_max": Target(value=16.0, rel_tol=0.05),
        "trough_min": Target(value=2.0, rel_tol=0.05),
        "fwhm_time": Target(value=fwhm_time, rel_tol=0.10),
    })


# =============================================================================
# MODULATION FUNCTIONS
# =============================================================================

def _flying_a(t):
    return 1.0 / (1.0 + np.cos(t) ** 2)


def _flying_a_t(t):
    return np.sin(2.0 * t) / (1.0 + np.cos(t) ** 2) ** 2


def _flying_a_tt(t):
    d = 1.0 + np.cos(t) ** 2
    return 2.0 * np.cos(2.0 * t) / d ** 2 + 2.0 * np.sin(2.0 * t) ** 2 / d ** 3


def flying_bird_tau(t):
    """
    Closed form of integral_0^t (1 + cos^2 s)^-2 ds,

        -tan t / (4 (tan^2 t + 2)) + (3 sqrt2 / 8) arctan(tan t / sqrt2),

    continued through t = pi/2 + k pi so it grows by 3 pi / (4 sqrt2) per pi.
    """
    t = np.asarray(t, dtype=np.float64)
    s, c = np.sin(t), np.cos(t)
    angle = np.arctan2(s / SQRT2, c)
    angle = angle + 2.0 * np.pi * np.round((t - angle) / (2.0 * np.pi))
    return -s * c / (4.0 * (s ** 2 + 2.0 * c ** 2)) + 3.0 * SQRT2 / 8.0 * angle


def flying_bird_literal_b(t):
    """-tan t / (16 (tan^2 t + 2)) + 3 sqrt2 arctan(tan t / sqrt2) / 32, branch-continued; equals tau / 4."""
    return flying_bird_tau(t) / 4.0


# =============================================================================
# CATALOG
# =============================================================================

def _vanishing_static(scale=None) -> ScenarioSpec:
    return ScenarioSpec(
        name="vanishing_static",
        description="V = 0, g = -1: the breather at rest",
        plan=ModulationPlan(
            name="vanishing_static",
            a=constant(1.0), a_t=constant(0.0), a_tt=constant(0.0),
            b_t=constant(0.0), b_tt=constant(0.0),
            tau=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
        ),
        horizon=8.0,
        expected=_static_breathing(),
    )


def _vanishing_moving(scale=None) -> ScenarioSpec:
    return ScenarioSpec(
        name="vanishing_moving",
        description="V = 0, b = t: the breather drifts with center of mass -t",
        plan=ModulationPlan(
            name="vanishing_moving",
            a=constant(1.0), a_t=constant(0.0), a_tt=constant(0.0),
            b=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
            b_t=constant(1.0), b_tt=constant(0.0),
            c_policy=CPolicy.quadrature_f3_zero,
            c=lambda t: -0.5 * np.asarray(t, dtype=np.float64),
            tau=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
        ),
        box=30.0,
        horizon=8.0,
        # the center of mass reaches x = -100 at t = 100
        stability_box=120.0,
        expected=_static_breathing(),
    )


def _flying_bird(scale=None) -> ScenarioSpec:
    return ScenarioSpec(
        name="flying_bird",
        description="V = 2cos(2t)/(3 + cos(2t)) x^2, alternating trap and expulsion",
        plan=ModulationPlan(
            name="flying_bird",
            a=_flying_a, a_t=_flying_a_t, a_tt=_flying_a_tt,
            b_t=constant(0.0), b_tt=constant(0.0),
        ),
        horizon=10.5,
        expected=_flying_breathing(fwhm_time=0.54),
    )


def _flying_bird_moving(scale=None) -> ScenarioSpec:
    return ScenarioSpec(
        name="flying_bird_moving",
        description="flying-bird width with b = tau/4 (f2 = 0); two time scales in the trace",
        plan=ModulationPlan(
            name="flying_bird_moving",
            a=_flying_a, a_t=_flying_a_t, a_tt=_flying_a_tt,
            b=flying_bird_literal_b,
            b_t=lambda t: _flying_a(t) ** 2 / 4.0,
            b_tt=lambda t: _flying_a(t) * _flying_a_t(t) / 2.0,
            c_policy=CPolicy.quadrature_f3_zero,
            tau=flying_bird_tau,
        ),
        box=30.0,
        horizon=10.5,
        experimental=True,
    )


def _seesaw(scale=None) -> ScenarioSpec:
    return ScenarioSpec(
        name="seesaw",
        description="V = sin(t) x, b = -sin t: zig-zag of the center of mass",
        plan=ModulationPlan(
            name="seesaw",
            a=constant(1.0), a_t=constant(0.0), a_tt=constant(0.0),
            b=lambda t: -np.sin(t),
            b_t=lambda t: -np.cos(t),
            b_tt=lambda t: np.sin(t),
            c_policy=CPolicy.quadrature_f3_zero,
            c=lambda t: -np.asarray(t, dtype=np.float64) / 4.0 - np.sin(2.0 * np.asarray(t)) / 8.0,
            tau=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
        ),
        horizon=8.0,
        expected=_seesaw_breathing(),
    )


def _combined(name: str, omega: float, description: str) -> ScenarioSpec:
    return ScenarioSpec(
        name=name,
        description=description,
        plan=ModulationPlan(
            name=name,
            a=_flying_a, a_t=_flying_a_t, a_tt=_flying_a_tt,
            b=lambda t: np.sin(omega * t),
            b_t=lambda t: omega * np.cos(omega * t),
            b_tt=lambda t: -omega ** 2 * np.sin(omega * t),
            c_policy=CPolicy.quadrature_f3_zero,
            tau=flying_bird_tau,
        ),
        horizon=10.5,
        expected=_flying_breathing(fwhm_time=0.56),
    )


def _combined_periodic(scale=None) -> ScenarioSpec:
    return _combined("combined_periodic", 1.0, "flying-bird width with b = sin t: periodic center of mass")


def _combined_quasiperiodic(scale=None) -> ScenarioSpec:
    return _combined("combined_quasiperiodic", SQRT2, "flying-bird width with b = sin(sqrt2 t): quasiperiodic center of mass")


def _npse_comparison(scale=None) -> ScenarioSpec:
    """a = scale (0.1 by default), V = 0, nonpolynomial model; grid and steps rescaled with a."""
    a = 0.1 if scale is None else float(scale)
    if not a > 0:
        raise DomainError(f"npse_comparison needs a positive scale, got {a}")
    return ScenarioSpec(
        name="npse_comparison",
        description="nonpolynomial model with a = const, g = -a, V = 0",
        plan=ModulationPlan(
            name="npse_comparison",
            a=constant(a), a_t=constant(0.0), a_tt=constant(0.0),
            b_t=constant(0.0), b_tt=constant(0.0),
            tau=lambda t: a ** 2 * np.asarray(t, dtype=np.float64),
        ),
        model_kind=ModelKind.nonpolynomial,
        box=settings.DEFAULT_BOX / a,
        dx=settings.DEFAULT_DX / a,
        dt=settings.DEFAULT_DT / a ** 2,
        horizon=8.0 / a ** 2,
        stability_horizon=100.0 / a ** 2,
    )


CATALOG: Dict[str, Callable[..., ScenarioSpec]] = {
    "vanishing_static": _vanishing_static,
    "vanishing_moving": _vanishing_moving,
    "flying_bird": _flying_bird,
    "flying_bird_moving": _flying_bird_moving,
    "seesaw": _seesaw,
    "combined_periodic": _combined_periodic,
    "combined_quasiperiodic": _combined_quasiperiodic,
    "npse_comparison": _npse_comparison,
}

SCALABLE = {"npse_comparison"}


def scenario_names():
    return list(CATALOG)


def self_check(scenario: ScenarioSpec) -> float:
    """gpe_residual of the scenario's plan on the probe lattice [-12, 12] x {0, 1, ..., 5}."""
    probe = SpatialGrid(x_min=-PROBE_HALF_WIDTH, x_max=PROBE_HALF_WIDTH, n_points=PROBE_POINTS)
    return gpe_residual(scenario.plan, scenario.spec, probe, times=PROBE_TIMES)


def build_scenario(name: str, self_check_residual: bool = True, scale: Optional[float] = None) -> ScenarioSpec:
    """
    Look up a catalog entry.

    Raises:
        CatalogError: unknown name
        DomainError: `scale` given for a fixed-scale scenario, or the residual self-check fails
    """
    builder = CATALOG.get(name)
    if builder is None:
        raise CatalogError(f"unknown scenario '{name}'; known: {', '.join(CATALOG)}")
    if scale is not None and name not in SCALABLE:
        raise DomainError(f"scenario '{name}' has a fixed scale")

    scenario = builder(scale)
    if not self_check_residual:
        return scenario

    residual = self_check(scenario)
    logger.info(f"[Scenario={name}] GPE residual self-check: {residual:.3e}")
    if residual >= settings.RESIDUAL_TOL and not scenario.experimental:
        raise DomainError(
            f"scenario '{name}' fails the residual self-check: {residual:.3e} >= {settings.RESIDUAL_TOL:.0e}"
        )
    return scenario.model_copy(update={"residual": residual})
