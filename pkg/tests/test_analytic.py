import numpy as np
import pytest

from breather.schemas.field_schema import SpatialGrid
from breather.schemas.modulation_schema import NonlinearitySpec
from breather.services.analytic import (
    BreatherSolution,
    gpe_residual,
    modulated_psi,
    modulated_values,
    nlse_residual,
    satsuma_yajima,
)
from breather.services.modulation import identity_plan
from breather.services.scenarios import build_scenario
from breather.utils.errors import DomainError


def test_initial_profile_is_two_sech():
    zeta = np.linspace(-15.0, 15.0, 3001)
    np.testing.assert_allclose(satsuma_yajima(zeta, 0.0), 2.0 / np.cosh(zeta), rtol=1e-12, atol=1e-300)


def test_center_density_oscillates_between_4_and_16():
    tau = np.linspace(0.0, np.pi, 401)
    density = np.abs(satsuma_yajima(0.0, tau)) ** 2
    expected = 16 * (10 + 6 * np.cos(4 * tau)) / (5 + 3 * np.cos(4 * tau)) ** 2
    np.testing.assert_allclose(density, expected, rtol=1e-12)
    assert density.min() == pytest.approx(4.0, rel=1e-12)
    assert density.max() == pytest.approx(16.0, rel=1e-12)


def test_tails_decay_without_overflow():
    values = satsuma_yajima(np.array([50.0, -200.0, 800.0]), 0.3)
    assert np.all(np.isfinite(values))
    assert np.all(np.abs(values) < 1e-20)


def test_continuous_across_overflow_guard():
    eps = 1e-9
    for tau in (0.0, 0.4, 1.1):
        inside = satsuma_yajima(10.0 - eps, tau)
        outside = satsuma_yajima(10.0 + eps, tau)
        assert abs(outside - inside) <= 1e-8 * abs(inside)


def test_scalar_input_gives_complex_scalar():
    assert isinstance(satsuma_yajima(0.5, 0.2), complex)


def test_breather_solves_the_nlse():
    assert nlse_residual(satsuma_yajima, G=-1.0) < 5e-3


def test_breather_does_not_solve_the_repulsive_nlse():
    assert nlse_residual(satsuma_yajima, G=1.0) > 1.0


def test_plane_wave_residual_is_truncation_only():
    # k = 1, omega = k^2/2 + G = -1/2 for G = -1
    def plane_wave(zeta, tau):
        return np.exp(1j * (zeta + 0.5 * tau))

    assert nlse_residual(plane_wave, G=-1.0) < 1e-7


def test_breather_solution_only_for_attractive_unit_coupling():
    solution = BreatherSolution()
    assert solution(0.0, 0.0) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        BreatherSolution(G=1.0)


def test_identity_modulation_reproduces_phi():
    grid = SpatialGrid.from_box(10.0, 0.05)
    field = modulated_psi(identity_plan(), grid, 0.7)
    np.testing.assert_allclose(field.amplitudes, satsuma_yajima(grid.x, 0.7), atol=1e-14)


def test_modulated_values_broadcast_over_times():
    plan = build_scenario("flying_bird", self_check_residual=False).plan
    x = np.linspace(-3, 3, 7)[None, :]
    t = np.array([0.0, 0.5, 1.0])[:, None]
    block = modulated_values(plan, x, t)
    assert block.shape == (3, 7)
    np.testing.assert_allclose(block[1], modulated_values(plan, x[0], 0.5), atol=1e-13)


def test_modulated_density_scales_with_width():
    plan = build_scenario("flying_bird", self_check_residual=False).plan
    grid = SpatialGrid.from_box(10.0, 0.05)
    # a(0) = 1/2, tau(0) = 0: |psi|^2 = a |2 sech(a x)|^2
    density = modulated_psi(plan, grid, 0.0).density
    np.testing.assert_allclose(density, 0.5 * 4.0 / np.cosh(0.5 * grid.x) ** 2, rtol=1e-12)


@pytest.mark.parametrize("name", [
    "vanishing_static", "vanishing_moving", "flying_bird", "seesaw",
    "combined_periodic", "combined_quasiperiodic", "npse_comparison",
])
def test_modulated_breather_solves_the_gpe(name):
    scenario = build_scenario(name, self_check_residual=False)
    probe = SpatialGrid(x_min=-12.0, x_max=12.0, n_points=241)
    assert gpe_residual(scenario.plan, scenario.spec, probe, t_range=(0.0, 5.0), n_times=11) < 5e-3


def test_gpe_residual_sees_a_missing_potential():
    scenario = build_scenario("flying_bird", self_check_residual=False)
    probe = SpatialGrid(x_min=-12.0, x_max=12.0, n_points=241)
    assert gpe_residual(scenario.plan, scenario.spec, probe, t_range=(0.0, 5.0), potential_scale=0.0) > 0.1


def test_gpe_residual_needs_cubic_coefficient():
    probe = SpatialGrid(x_min=-5.0, x_max=5.0, n_points=51)
    with pytest.raises(DomainError):
        gpe_residual(identity_plan(), NonlinearitySpec(coefficients={2: 1.0}), probe)
