import numpy as np
import pytest

from breather.schemas.field_schema import SpatialGrid, WaveField
from breather.schemas.solver_schema import SolverConfig, TridiagonalSystem
from breather.services.analytic import modulated_psi
from breather.services.modulation import identity_plan
from breather.services.propagator import (
    CrankNicolsonStepper,
    NonlinearModel,
    constant_potential,
    linear_half_step,
    nonlinear_phase_step,
    npse_factor,
    propagate,
    thomas_solve,
)
from breather.utils.enums import LinearSolver, NonlinearKind, SplittingScheme
from breather.utils.errors import BlowUpError, DomainError, NonpolynomialDomainError, SingularSystemError


# --- tridiagonal solve --------------------------------------------------------

def test_thomas_identity():
    rhs = np.array([1 + 2j, -3.0, 0.5j, 4.0])
    system = TridiagonalSystem(lower=np.zeros(4), diagonal=np.ones(4), upper=np.zeros(4), rhs=rhs)
    np.testing.assert_array_equal(thomas_solve(system), rhs)


def test_thomas_matches_dense_oracle(rng):
    for _ in range(1000):
        n = 8
        lower = rng.normal(size=n) + 1j * rng.normal(size=n)
        upper = rng.normal(size=n) + 1j * rng.normal(size=n)
        diagonal = 4.0 + rng.normal(size=n) + 1j * rng.normal(size=n)
        rhs = rng.normal(size=n) + 1j * rng.normal(size=n)
        system = TridiagonalSystem(lower=lower, diagonal=diagonal, upper=upper, rhs=rhs)
        oracle = np.linalg.solve(system.dense(), rhs)
        assert np.max(np.abs(thomas_solve(system) - oracle)) < 1e-12


def test_thomas_zero_diagonal_is_singular():
    system = TridiagonalSystem(lower=np.ones(5), diagonal=np.zeros(5), upper=np.ones(5), rhs=np.ones(5))
    with pytest.raises(SingularSystemError):
        thomas_solve(system)


def test_tridiagonal_lengths_must_agree():
    with pytest.raises(DomainError):
        TridiagonalSystem(lower=np.ones(3), diagonal=np.ones(4), upper=np.ones(4), rhs=np.ones(4))


# --- linear step --------------------------------------------------------------

def test_crank_nicolson_eigenmode_phase():
    length, n_mode, dt = 10.0, 3, 0.01
    grid = SpatialGrid(x_min=0.0, x_max=length, n_points=201)
    dx = grid.dx
    mode = np.sin(n_mode * np.pi * (grid.x - grid.x_min) / length)
    mode[0] = mode[-1] = 0.0

    out = linear_half_step(WaveField(grid=grid, amplitudes=mode), dt).amplitudes
    lam = dt * (1 - np.cos(n_mode * np.pi * dx / length)) / dx ** 2
    factor = (1 - 0.5j * lam) / (1 + 0.5j * lam)
    np.testing.assert_allclose(out, factor * mode, atol=1e-13)
    np.testing.assert_allclose(np.abs(out[1:-1]) / np.abs(mode[1:-1]), 1.0, atol=1e-12)


def test_linear_step_conserves_norm(rng):
    grid = SpatialGrid.from_box(10.0, 0.05)
    psi = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    psi[0] = psi[-1] = 0.0
    out = linear_half_step(WaveField(grid=grid, amplitudes=psi), 0.01).amplitudes
    before, after = np.sum(np.abs(psi) ** 2), np.sum(np.abs(out) ** 2)
    assert abs(after - before) / before < 1e-13


def test_banded_and_thomas_backends_agree(sech_field):
    psi = np.asarray(sech_field.amplitudes)
    banded = CrankNicolsonStepper(sech_field.grid, 1e-3, LinearSolver.banded).step(psi)
    thomas = CrankNicolsonStepper(sech_field.grid, 1e-3, LinearSolver.thomas).step(psi)
    np.testing.assert_allclose(banded, thomas, atol=1e-13)


def test_free_gaussian_spreading():
    grid = SpatialGrid.from_box(15.0, 0.02)
    x = grid.x
    field = WaveField(grid=grid, amplitudes=np.pi ** -0.25 * np.exp(-x ** 2 / 2))
    result = propagate(field, None, NonlinearModel.cubic(0.0), SolverConfig(dt=1e-3), 0.0, 1.0)
    center = np.abs(result.field.amplitudes[grid.n_points // 2]) ** 2
    assert center == pytest.approx((2 * np.pi) ** -0.5, abs=1e-4)


# --- phase step ---------------------------------------------------------------

def test_phase_step_preserves_modulus(sech_field):
    out = nonlinear_phase_step(sech_field, 0.3 * sech_field.grid.x ** 2, NonlinearModel.cubic(-1.0), 0.0, 0.01)
    np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(sech_field.amplitudes), rtol=1e-15)


def test_cubic_phase_increment(coarse_grid):
    field = WaveField(grid=coarse_grid, amplitudes=np.full(coarse_grid.n_points, 2.0))
    out = nonlinear_phase_step(field, np.zeros(coarse_grid.n_points), NonlinearModel.cubic(-1.0), 0.0, 1e-4)
    np.testing.assert_allclose(np.angle(out.amplitudes), 4e-4, atol=1e-15)


def test_npse_factor_at_reported_coupling():
    assert npse_factor(-0.16) == pytest.approx(0.82924, abs=5e-5)
    assert npse_factor(0.0) == 1.0


def test_npse_domain_violation(coarse_grid):
    field = WaveField(grid=coarse_grid, amplitudes=np.full(coarse_grid.n_points, np.sqrt(2.0)))
    with pytest.raises(NonpolynomialDomainError):
        nonlinear_phase_step(field, np.zeros(coarse_grid.n_points), NonlinearModel.nonpolynomial(-1.0), 0.0, 1e-3)


def test_npse_spatial_profile(coarse_grid):
    model = NonlinearModel.nonpolynomial(-0.1, profile=lambda x: np.exp(-x ** 2))
    assert model.kind is NonlinearKind.nonpolynomial
    density = np.full(coarse_grid.n_points, 1.0)
    term = model.term(density, coarse_grid.x, 0.0)
    assert term[np.argmin(np.abs(coarse_grid.x))] == pytest.approx(npse_factor(-0.1))
    assert term[0] == pytest.approx(1.0, abs=1e-12)


def test_polynomial_model_needs_coefficients():
    with pytest.raises(DomainError):
        NonlinearModel(kind=NonlinearKind.polynomial)


def test_quintic_term(coarse_grid):
    model = NonlinearModel(kind=NonlinearKind.polynomial, coefficients=lambda t: {1: -1.0, 2: 0.25})
    density = np.full(coarse_grid.n_points, 2.0)
    np.testing.assert_allclose(model.term(density, coarse_grid.x, 0.0), -2.0 + 0.25 * 4.0)


# --- propagation --------------------------------------------------------------

def _static_run(dt, t1, grid, splitting=SplittingScheme.strang):
    plan = identity_plan()
    field = modulated_psi(plan, grid, 0.0)
    config = SolverConfig(dt=dt, splitting=splitting)
    return propagate(field, plan, NonlinearModel.cubic(-1.0), config, 0.0, t1)


def test_breather_over_one_period(coarse_grid):
    result = _static_run(1e-3, np.pi / 2, coarse_grid)
    exact = modulated_psi(identity_plan(), coarse_grid, np.pi / 2).amplitudes
    assert np.max(np.abs(result.field.amplitudes - exact)) < 2e-2
    assert result.norm_drift < 1e-8


def test_strang_is_second_order_in_time(coarse_grid):
    reference = _static_run(2.5e-4, 0.5, coarse_grid).field.amplitudes
    coarse = _static_run(2e-3, 0.5, coarse_grid).field.amplitudes
    fine = _static_run(1e-3, 0.5, coarse_grid).field.amplitudes
    ratio = np.max(np.abs(coarse - reference)) / np.max(np.abs(fine - reference))
    assert 3.2 < ratio < 4.8


def test_lie_is_first_order_in_time(coarse_grid):
    reference = _static_run(2.5e-4, 0.5, coarse_grid).field.amplitudes
    coarse = _static_run(2e-3, 0.5, coarse_grid, SplittingScheme.lie).field.amplitudes
    fine = _static_run(1e-3, 0.5, coarse_grid, SplittingScheme.lie).field.amplitudes
    ratio = np.max(np.abs(coarse - reference)) / np.max(np.abs(fine - reference))
    assert 1.6 < ratio < 2.4


def test_constant_potential_is_a_global_phase(sech_field):
    config = SolverConfig(dt=1e-3)
    model = NonlinearModel.cubic(-1.0)
    plain = propagate(sech_field, None, model, config, 0.0, 0.2).field.amplitudes
    gauged = propagate(sech_field, constant_potential(0.7), model, config, 0.0, 0.2).field.amplitudes
    np.testing.assert_allclose(gauged, plain * np.exp(-0.7j * 0.2), atol=1e-10)


def test_npse_weak_coupling_matches_cubic_plus_constant(sech_field):
    g = -2.5e-4
    config = SolverConfig(dt=1e-3)
    npse = propagate(sech_field, None, NonlinearModel.nonpolynomial(g), config, 0.0, np.pi / 2)
    cubic = propagate(sech_field, constant_potential(1.0), NonlinearModel.cubic(g), config, 0.0, np.pi / 2)
    assert np.max(np.abs(npse.field.density - cubic.field.density)) < 1e-4


def test_observers_see_start_and_every_stride(sech_field):
    seen = []
    config = SolverConfig(dt=1e-3, snapshot_stride=10)
    result = propagate(sech_field, None, NonlinearModel.cubic(-1.0), config, 0.0, 0.1,
                       observers=[lambda t, field: seen.append(t)])
    assert result.steps == 100
    assert len(seen) == 11
    assert seen[0] == 0.0
    assert seen[-1] == pytest.approx(0.1)


def test_step_count_lands_on_final_time(sech_field):
    result = propagate(sech_field, None, NonlinearModel.cubic(-1.0), SolverConfig(dt=0.003), 0.0, 0.1)
    assert result.steps == 33
    assert result.dt * result.steps == pytest.approx(0.1)


def test_empty_interval_is_rejected(sech_field):
    with pytest.raises(DomainError):
        propagate(sech_field, None, NonlinearModel.cubic(-1.0), SolverConfig(dt=1e-3), 1.0, 1.0)


def test_growth_aborts_with_blow_up(sech_field):
    def gain(x, t):
        return np.full(x.shape, 50j)

    config = SolverConfig(dt=0.01, check_every=1)
    with pytest.raises(BlowUpError) as info:
        propagate(sech_field, gain, NonlinearModel.cubic(0.0), config, 0.0, 1.0)
    assert info.value.t is not None and info.value.t < 0.2


@pytest.mark.slow
def test_desk_scale_fidelity_over_one_period():
    grid = SpatialGrid.from_box(20.0, 0.01)
    result = _static_run(1e-4, np.pi / 2, grid)
    exact = modulated_psi(identity_plan(), grid, np.pi / 2).amplitudes
    assert np.max(np.abs(result.field.amplitudes - exact)) < 5e-3
    assert result.norm_drift < 1e-8
