"""
Exact two-soliton breather of the autonomous cubic NLSE (G = -1) and its
modulated image under the Ansatz, plus finite-difference residual oracles.
"""

from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from breather.schemas.field_schema import SpatialGrid, WaveField
from breather.schemas.modulation_schema import NonlinearitySpec
from breather.services.modulation import ModulationPlan, coefficients_from, phase
from breather.utils.errors import DomainError

PROBE_STEP = 1e-3
BOUNDARY_SKIP = 3
OVERFLOW_SAFE_ZETA = 10.0

Sampler = Callable[[np.ndarray, np.ndarray], np.ndarray]


class BreatherSolution(BaseModel):
    """Phi(zeta, tau) of the cubic NLSE with G = -1; 2 sech(zeta) at tau = 0."""

    model_config = ConfigDict(frozen=True)

    G: float = -1.0

    @model_validator(mode="after")
    def check_coupling(self):
        if self.G != -1.0:
            raise DomainError(f"the closed-form breather solves the NLSE only for G = -1, got {self.G}")
        return self

    def __call__(self, zeta, tau):
        return satsuma_yajima(zeta, tau)


def satsuma_yajima(zeta, tau):
    """
    Phi = 4 (cosh 3z + 3 e^{4i tau} cosh z) e^{i tau / 2} / (cosh 4z + 4 cosh 2z + 3 cos 4 tau).

    For |z| > 10 numerator and denominator are divided by cosh 4z first, so
    the tails decay to zero instead of overflowing. The denominator is >= 2.
    """
    zeta, tau = np.broadcast_arrays(np.asarray(zeta, dtype=np.float64), np.asarray(tau, dtype=np.float64))
    s = np.abs(zeta)
    near = s <= OVERFLOW_SAFE_ZETA
    rotation = np.exp(4j * tau)
    cos4 = np.cos(4.0 * tau)

    sn = np.where(near, s, 0.0)
    direct = 4.0 * (np.cosh(3.0 * sn) + 3.0 * rotation * np.cosh(sn)) / (
        np.cosh(4.0 * sn) + 4.0 * np.cosh(2.0 * sn) + 3.0 * cos4
    )

    sf = np.where(near, OVERFLOW_SAFE_ZETA, s)
    tail = 1.0 + np.exp(-8.0 * sf)
    r3 = np.exp(-sf) * (1.0 + np.exp(-6.0 * sf)) / tail
    r2 = np.exp(-2.0 * sf) * (1.0 + np.exp(-4.0 * sf)) / tail
    r1 = np.exp(-3.0 * sf) * (1.0 + np.exp(-2.0 * sf)) / tail
    r0 = 2.0 * np.exp(-4.0 * sf) / tail
    scaled = 4.0 * (r3 + 3.0 * rotation * r1) / (1.0 + 4.0 * r2 + 3.0 * cos4 * r0)

    phi = np.where(near, direct, scaled) * np.exp(0.5j * tau)
    return complex(phi) if phi.ndim == 0 else phi


def modulated_values(plan: ModulationPlan, x, t, sampler: Sampler = satsuma_yajima) -> np.ndarray:
    """
    psi(x, t) = sqrt(a) e^{i eta} Phi(a x + b, tau) on broadcast (x, t).

    x and t broadcast like numpy arrays; kinematics are evaluated once per t.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    k = plan.evaluate(t)
    zeta = k.a * x + k.b
    return np.sqrt(k.a) * np.exp(1j * phase(k, x)) * sampler(zeta, k.tau)


def modulated_psi(plan: ModulationPlan, grid: SpatialGrid, t: float) -> WaveField:
    return WaveField(grid=grid, amplitudes=modulated_values(plan, grid.x, float(t)))


def nlse_residual(sampler: Sampler, G: float,
                  zeta_range: Tuple[float, float] = (-5.0, 5.0),
                  tau_range: Tuple[float, float] = (0.0, np.pi / 2),
                  dzeta: float = PROBE_STEP, dtau: float = PROBE_STEP,
                  n_zeta: int = 201, n_tau: int = 41) -> float:
    """max |i Phi_tau + Phi_zz / 2 - G |Phi|^2 Phi| over an interior probe lattice."""
    zeta = np.linspace(*zeta_range, n_zeta)[BOUNDARY_SKIP:-BOUNDARY_SKIP]
    tau = np.linspace(*tau_range, n_tau)
    Z, T = np.meshgrid(zeta, tau)

    phi = sampler(Z, T)
    phi_tau = (sampler(Z, T + dtau) - sampler(Z, T - dtau)) / (2.0 * dtau)
    phi_zz = (sampler(Z + dzeta, T) - 2.0 * phi + sampler(Z - dzeta, T)) / dzeta ** 2

    residual = 1j * phi_tau + 0.5 * phi_zz - G * np.abs(phi) ** 2 * phi
    return float(np.max(np.abs(residual)))


def gpe_residual(plan: ModulationPlan, spec: NonlinearitySpec, grid: SpatialGrid,
                 t_range: Tuple[float, float] = (0.0, 1.0), dt_probe: float = PROBE_STEP,
                 n_times: int = 11, times: Optional[Sequence[float]] = None,
                 dx_probe: float = PROBE_STEP, potential_scale: float = 1.0) -> float:
    """
    max |i psi_t + psi_xx / 2 - V psi - g |psi|^2 psi| for the modulated breather.

    V comes from the plan's potential coefficients and g = G3 a(t). The grid
    only supplies probe locations (3 points dropped at each end); derivatives
    use fixed steps dt_probe and dx_probe at every probe.
    """
    if spec.G3 is None:
        raise DomainError("gpe_residual needs a cubic coefficient G3")
    x = grid.x[BOUNDARY_SKIP:-BOUNDARY_SKIP][None, :]
    if times is None:
        times = np.linspace(*t_range, n_times)
    t = np.asarray(times, dtype=np.float64)[:, None]

    k = plan.evaluate(t)
    f1, f2, f3 = coefficients_from(k)
    potential = potential_scale * (f1 * x ** 2 + f2 * x + f3)
    g = spec.G3 * k.a

    psi = modulated_values(plan, x, t)
    psi_t = (modulated_values(plan, x, t + dt_probe) - modulated_values(plan, x, t - dt_probe)) / (2.0 * dt_probe)
    psi_xx = (
        modulated_values(plan, x + dx_probe, t) - 2.0 * psi + modulated_values(plan, x - dx_probe, t)
    ) / dx_probe ** 2

    residual = 1j * psi_t + 0.5 * psi_xx - potential * psi - g * np.abs(psi) ** 2 * psi
    return float(np.max(np.abs(residual)))
