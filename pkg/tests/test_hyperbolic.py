import math

import numpy as np
import pytest

import specgal as sg
from specgal import GridMismatchError, InsufficientDataError

from conftest import bump_field


def oscillator_problem(damping=0.0, cutoff=0.5, horizon=3.0):
    # single Dirichlet mode on [0, pi]: eigenvalue 1; cutoff below it
    # removes the nonlinear term entirely
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 1))
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_linear_profile(1.0),
        damping=damping,
        horizon=horizon,
        cutoff=cutoff,
    )
    initial = sg.WaveState(
        sg.unit_field(basis, (1,)), sg.SpectralField(basis, [0.0])
    )
    return basis, problem, initial


def test_rhs_damped_oscillator_form():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 1))
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_linear_profile(0.5),
        damping=0.3,
        horizon=1.0,
    )
    state = sg.WaveState(
        sg.SpectralField(basis, [2.0]), sg.SpectralField(basis, [1.5])
    )
    rate = sg.assemble_wave_rhs(state, 0.0, problem)
    lam = 1.0
    assert rate.position.coefficients[0] == pytest.approx(1.5, abs=1e-14)
    expected = -lam * 2.0 - (0.3 + 0.5 * lam) * 1.5
    assert rate.velocity.coefficients[0] == pytest.approx(expected, abs=1e-10)


def test_rhs_cutoff_gives_pure_wave():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 2))
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_exponential_profile(2.0),
        damping=0.0,
        horizon=1.0,
        cutoff=0.5,
    )
    rng = np.random.default_rng(4)
    state = sg.WaveState(
        sg.SpectralField(basis, rng.standard_normal(2)),
        sg.SpectralField(basis, rng.standard_normal(2)),
    )
    rate = sg.assemble_wave_rhs(state, 0.0, problem)
    expected = -basis.eigenvalues * state.position.coefficients
    assert np.abs(rate.velocity.coefficients - expected).max() < 1e-13


def test_rhs_zero_state_zero_rate():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 2))
    problem = sg.HyperbolicProblem(
        basis=basis, profile=sg.make_linear_profile(1.0), damping=0.4, horizon=1.0
    )
    zero = sg.SpectralField(basis, np.zeros(2))
    rate = sg.assemble_wave_rhs(sg.WaveState(zero, zero), 0.0, problem)
    assert np.all(rate.position.coefficients == 0.0)
    assert np.abs(rate.velocity.coefficients).max() < 1e-14


def test_undamped_oscillator_matches_cosine():
    _, problem, initial = oscillator_problem(damping=0.0, horizon=1.0)
    traj = sg.integrate_wave(
        problem, initial, record_times=np.linspace(0.0, 1.0, 11)
    )
    assert np.abs(traj.positions[:, 0] - np.cos(traj.times)).max() < 1e-8


def test_damped_oscillator_matches_closed_form():
    nu = 0.2
    _, problem, initial = oscillator_problem(damping=nu, horizon=3.0)
    traj = sg.integrate_wave(
        problem, initial, record_times=np.linspace(0.0, 3.0, 31)
    )
    omega = math.sqrt(1.0 - nu**2 / 4.0)
    t = traj.times
    exact = np.exp(-nu * t / 2.0) * (
        np.cos(omega * t) + (nu / (2.0 * omega)) * np.sin(omega * t)
    )
    assert np.abs(traj.positions[:, 0] - exact).max() < 1e-8


def test_zero_data_zero_trajectory():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 2))
    problem = sg.HyperbolicProblem(
        basis=basis, profile=sg.make_linear_profile(1.0), damping=0.1, horizon=1.0
    )
    zero = sg.SpectralField(basis, np.zeros(2))
    traj = sg.integrate_wave(problem, sg.WaveState(zero, zero))
    assert np.all(traj.positions == 0.0) and np.all(traj.velocities == 0.0)


def test_energy_decays_without_forcing():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 3, 2))
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_exponential_profile(2.0),
        damping=0.5,
        horizon=2.0,
    )
    initial = sg.WaveState(
        bump_field(basis), sg.SpectralField(basis, np.zeros(basis.n_modes))
    )
    traj = sg.integrate_wave(
        problem, initial, record_times=np.linspace(0.0, 2.0, 41)
    )
    report = sg.wave_energy_audit(traj, problem)
    assert np.all(np.diff(report.energy) <= report.identity_tolerance)
    assert report.sup_velocity_sq <= report.energy[0] + report.identity_tolerance
    assert not report.identity_violations.any()
    assert not report.slope_violations.any()
    assert report.integral_bound_satisfied
    assert np.all(report.nonlinear_dissipation >= -1e-12)


@pytest.mark.parametrize("nu", [0.1, 1.0])
@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("profile_kind", ["linear", "exponential"])
def test_energy_slope_bound_scenario_matrix(nu, n, profile_kind):
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 3, n))
    profile = (
        sg.make_linear_profile(0.7)
        if profile_kind == "linear"
        else sg.make_exponential_profile(2.0)
    )
    problem = sg.HyperbolicProblem(
        basis=basis, profile=profile, damping=nu, horizon=1.0
    )
    start = sg.WaveState(
        bump_field(basis), sg.SpectralField(basis, np.zeros(basis.n_modes))
    )
    traj = sg.integrate_wave(
        problem, start, record_times=np.linspace(0.0, 1.0, 21)
    )
    report = sg.wave_energy_audit(traj, problem)
    assert not report.slope_violations.any()
    assert not report.identity_violations.any()
    assert report.velocity_sq_integral <= report.bound_m * 1.0 + 1e-8
    assert report.sup_velocity_sq <= report.bound_m + report.identity_tolerance


def test_undamped_linear_wave_conserves_energy():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 3))
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_linear_profile(1.0),
        damping=0.0,
        horizon=2.0,
        cutoff=0.5,
    )
    initial = sg.WaveState(
        bump_field(basis), sg.SpectralField(basis, np.zeros(3))
    )
    traj = sg.integrate_wave(
        problem, initial, record_times=np.linspace(0.0, 2.0, 21)
    )
    report = sg.wave_energy_audit(traj, problem)
    drift = np.abs(report.energy - report.energy[0]).max()
    assert drift <= report.identity_tolerance
    assert report.integral_bound_satisfied


def test_forced_damped_run_respects_slope_bound():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 3))
    forcing = sg.SpectralField(basis, [0.4, -0.1, 0.0])
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_exponential_profile(2.0),
        damping=1.0,
        horizon=2.0,
        forcing=forcing,
    )
    initial = sg.WaveState(
        bump_field(basis), sg.SpectralField(basis, np.zeros(3))
    )
    traj = sg.integrate_wave(
        problem, initial, record_times=np.linspace(0.0, 2.0, 41)
    )
    report = sg.wave_energy_audit(traj, problem)
    assert report.bound_applicable
    assert not report.slope_violations.any()
    assert not report.identity_violations.any()
    assert report.sup_velocity_sq <= report.bound_m + report.identity_tolerance
    assert report.integral_bound_satisfied
    assert np.all(report.damped_form_residuals <= report.identity_tolerance)


def test_undamped_forced_bound_not_applicable():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 2))
    forcing = sg.SpectralField(basis, [0.2, 0.0])
    problem = sg.HyperbolicProblem(
        basis=basis,
        profile=sg.make_linear_profile(1.0),
        damping=0.0,
        horizon=1.0,
        forcing=forcing,
    )
    initial = sg.WaveState(
        sg.unit_field(basis, (1,)), sg.SpectralField(basis, np.zeros(2))
    )
    traj = sg.integrate_wave(problem, initial)
    report = sg.wave_energy_audit(traj, problem)
    assert not report.bound_applicable
    assert report.bound_m is None


def test_velocity_consistency_second_order():
    _, problem, initial = oscillator_problem(damping=0.2, horizon=3.0)
    control = sg.StepControl(rtol=1e-11, atol=1e-13)
    fine = sg.integrate_wave(
        problem, initial, control, record_times=np.linspace(0.0, 3.0, 129)
    )
    coarse = sg.WaveTrajectory(
        fine.basis, fine.times[::2], fine.positions[::2], fine.velocities[::2]
    )
    ratio = sg.velocity_consistency(coarse) / sg.velocity_consistency(fine)
    assert 3.6 <= ratio <= 4.4


def test_velocity_consistency_exact_samples():
    # closed-form damped oscillator sampled directly, no integrator at all
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 1))
    nu = 0.2
    omega = math.sqrt(1.0 - nu**2 / 4.0)

    def traj_at(spacing):
        t = np.arange(0.0, 3.0 + spacing / 2, spacing)
        pos = np.exp(-nu * t / 2.0) * (
            np.cos(omega * t) + (nu / (2.0 * omega)) * np.sin(omega * t)
        )
        # analytic velocity of the mode amplitude
        vel = np.exp(-nu * t / 2.0) * (
            -(omega + nu**2 / (4.0 * omega)) * np.sin(omega * t)
        )
        return sg.WaveTrajectory(basis, t, pos[:, None], vel[:, None])

    coarse = sg.velocity_consistency(traj_at(3.0 / 64))
    fine = sg.velocity_consistency(traj_at(3.0 / 128))
    assert coarse / fine == pytest.approx(4.0, abs=0.4)


def test_velocity_consistency_constant_state_zero():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 1))
    times = np.linspace(0.0, 1.0, 5)
    traj = sg.WaveTrajectory(
        basis, times, np.ones((5, 1)), np.zeros((5, 1))
    )
    assert sg.velocity_consistency(traj) == 0.0


def test_velocity_consistency_small_on_dense_default_run():
    _, problem, initial = oscillator_problem(damping=0.2, horizon=0.5)
    traj = sg.integrate_wave(
        problem, initial, record_times=np.linspace(0.0, 0.5, 201)
    )
    residual = sg.velocity_consistency(traj)
    assert residual <= 1e-6 * (1.0 + np.abs(traj.positions).max())


def test_velocity_consistency_needs_three_times():
    basis = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 1))
    traj = sg.WaveTrajectory(
        basis, np.array([0.0, 1.0]), np.zeros((2, 1)), np.zeros((2, 1))
    )
    with pytest.raises(InsufficientDataError):
        sg.velocity_consistency(traj)


def test_wave_state_basis_mismatch():
    a = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 1))
    b = sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 2))
    with pytest.raises(GridMismatchError):
        sg.WaveState(sg.unit_field(a, (1,)), sg.SpectralField(b, np.zeros(2)))
