"""Grid-level operations on wave fields: integral moments and seeded perturbations."""

import numpy as np
from scipy.integrate import trapezoid

from breather.config import settings
from breather.schemas.field_schema import Moments, WaveField
from breather.utils.errors import DegenerateFieldError, DomainError


def moments(field: WaveField) -> Moments:
    """
    Norm, center of mass and rms width of |psi|^2, all by trapezoidal quadrature.

    Raises:
        DegenerateFieldError: norm below settings.DEGENERATE_NORM
    """
    x = field.grid.x
    density = field.density
    norm = float(trapezoid(density, dx=field.grid.dx))
    if norm < settings.DEGENERATE_NORM:
        raise DegenerateFieldError(f"field norm {norm:.3e} is below {settings.DEGENERATE_NORM:.0e}")

    com = float(trapezoid(x * density, dx=field.grid.dx)) / norm
    variance = float(trapezoid((x - com) ** 2 * density, dx=field.grid.dx)) / norm
    return Moments(norm=norm, center_of_mass=com, rms_width=float(np.sqrt(max(variance, 0.0))))


def perturb(field: WaveField, amplitude: float, seed: int) -> WaveField:
    """psi_k -> psi_k * (1 + amplitude * u_k), u_k ~ U[-1, 1] drawn from a generator seeded by `seed`."""
    if amplitude < 0:
        raise DomainError(f"perturbation amplitude must be >= 0, got {amplitude}")
    if amplitude == 0:
        return field.with_amplitudes(field.amplitudes)

    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, size=field.grid.n_points)
    return field.with_amplitudes(field.amplitudes * (1.0 + amplitude * noise))
