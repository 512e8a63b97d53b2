"""Damped nonlinear wave propagation in a spectral Galerkin basis.

The second-order system

    d2U/dt2 = -a(lam) U - nu dU/dt + (cut Laplacian of F(dU/dt)) + f(t)

is integrated as a first-order system in (position, velocity)
coefficients with the same adaptive machinery as the diffusion module.
Note the nonlinearity acts on the velocity.  Running integrals of the
damping loss, the nonlinear dissipation, and the forcing work ride
along with the state so the energy audit closes the balance at
integrator accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .basis import GridTransform, SpectralBasis, SpectralField
from .errors import (
    ConfigurationError,
    GridMismatchError,
    InsufficientDataError,
    NumericError,
)
from .integrate import StepControl, default_record_times, integrate_ode
from .nonlinearity import NonlinearityProfile
from .parabolic import _forcing_coefficients, evaluate_symbol


@dataclass(frozen=True)
class HyperbolicProblem:
    """Immutable description of one damped wave run."""

    basis: SpectralBasis
    profile: NonlinearityProfile
    damping: float
    horizon: float
    a_multiplier: Callable[[float], float] | None = None
    forcing: object = None
    cutoff: float = math.inf

    def __post_init__(self):
        if self.damping < 0:
            raise ConfigurationError("damping must be nonnegative")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigurationError("horizon must be positive and finite")
        if self.cutoff < 0:
            raise ConfigurationError("cutoff must be nonnegative")


@dataclass(frozen=True)
class WaveState:
    """Position and velocity coefficients sharing one basis."""

    position: SpectralField
    velocity: SpectralField

    def __post_init__(self):
        if self.position.basis.spec != self.velocity.basis.spec:
            raise GridMismatchError(
                "position and velocity must share one basis"
            )


@dataclass(frozen=True)
class WaveTrajectory:
    """Recorded wave states plus running energy integrals."""

    basis: SpectralBasis
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        pos = np.asarray(self.positions, dtype=float)
        vel = np.asarray(self.velocities, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("trajectory times must increase")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise NumericError("trajectory contains non-finite states")
        for arr in (times, pos, vel):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    def state(self, index: int) -> WaveState:
        return WaveState(
            SpectralField(self.basis, self.positions[index]),
            SpectralField(self.basis, self.velocities[index]),
        )

    @property
    def n_times(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class WaveEnergyReport:
    """Wave energy terms, slope checks, and uniform bounds."""

    times: np.ndarray
    energy: np.ndarray
    velocity_l2_sq: np.ndarray
    position_l2_sq: np.ndarray
    nonlinear_dissipation: np.ndarray
    identity_residuals: np.ndarray
    identity_tolerance: float
    identity_violations: np.ndarray
    slope_residuals: np.ndarray | None
    slope_violations: np.ndarray | None
    bound_applicable: bool
    bound_m: float | None
    sup_velocity_sq: float
    sup_position_sq: float
    velocity_sq_integral: float
    integral_bound_satisfied: bool | None
    damped_form_residuals: np.ndarray | None


class WaveRunner:
    """Right-hand side of the first-order reformulation.

    State layout: ``[position, velocity, I_kin, I_nl, I_work]``, where
    I_kin integrates the squared velocity norm, I_nl the nonlinear
    dissipation, and I_work the forcing work against the velocity.
    """

    N_AUX = 3

    def __init__(self, problem: HyperbolicProblem):
        self.problem = problem
        basis = problem.basis
        self.n_modes = basis.n_modes
        self.a_diag = evaluate_symbol(problem.a_multiplier, basis.eigenvalues)
        mask = basis.eigenvalues <= problem.cutoff
        self.nl_scale = -basis.eigenvalues * mask
        self.transform = GridTransform(basis)
        self.forcing_at = _forcing_coefficients(problem.forcing, self.n_modes)
        # lift F(0) before projecting, as in the diffusion runner; the
        # velocity also vanishes on Dirichlet walls
        self.f_offset, _ = problem.profile.evaluate(0.0)

    def terms(self, t, position, velocity):
        values = self.transform.to_grid(velocity)
        f_values, _ = self.problem.profile.evaluate(values)
        f_coeffs = self.transform.to_coefficients(f_values - self.f_offset)
        nl = self.nl_scale * f_coeffs
        force = self.forcing_at(t)
        dvel = (
            -self.a_diag * position
            - self.problem.damping * velocity
            + nl
            + force
        )
        kinetic = float(np.dot(velocity, velocity))
        nonlinear = -float(np.dot(velocity, nl))
        work = float(np.dot(force, velocity))
        return dvel, kinetic, nonlinear, work

    def rhs(self, t, y):
        m = self.n_modes
        position = y[:m]
        velocity = y[m : 2 * m]
        if not (np.all(np.isfinite(position)) and np.all(np.isfinite(velocity))):
            raise NumericError(f"non-finite wave state at t={t:.6g}")
        dvel, kinetic, nonlinear, work = self.terms(t, position, velocity)
        return np.concatenate([velocity, dvel, [kinetic, nonlinear, work]])

    def forcing_norm_sq(self, t: float) -> float:
        vec = self.forcing_at(t)
        return float(np.dot(vec, vec))

    def energy(self, position, velocity) -> float:
        return float(
            np.dot(velocity, velocity) + np.dot(self.a_diag, position * position)
        )


def assemble_wave_rhs(
    state: WaveState, t: float, problem: HyperbolicProblem
) -> WaveState:
    """Time derivative (dU/dt, d2U/dt2) of the damped wave system."""
    if state.position.basis.spec != problem.basis.spec:
        raise GridMismatchError("state basis does not match the problem basis")
    runner = WaveRunner(problem)
    dvel, _, _, _ = runner.terms(
        t, state.position.coefficients, state.velocity.coefficients
    )
    return WaveState(
        SpectralField(problem.basis, state.velocity.coefficients),
        SpectralField(problem.basis, dvel),
    )


def integrate_wave(
    problem: HyperbolicProblem,
    initial: WaveState,
    control: StepControl = StepControl(),
    record_times=None,
) -> WaveTrajectory:
    """Adaptive solve of the damped wave system on [0, horizon]."""
    if initial.position.basis.spec != problem.basis.spec:
        raise GridMismatchError("initial state basis does not match the problem")
    runner = WaveRunner(problem)
    times = (
        default_record_times(problem.horizon)
        if record_times is None
        else record_times
    )
    y0 = np.concatenate(
        [
            initial.position.coefficients,
            initial.velocity.coefficients,
            np.zeros(WaveRunner.N_AUX),
        ]
    )
    t_out, states = integrate_ode(runner.rhs, y0, problem.horizon, times, control)
    m = runner.n_modes
    diagnostics = {
        "kinetic_integral": states[:, 2 * m],
        "nonlinear_dissipation_integral": states[:, 2 * m + 1],
        "forcing_work_integral": states[:, 2 * m + 2],
    }
    return WaveTrajectory(
        basis=problem.basis,
        times=t_out,
        positions=states[:, :m],
        velocities=states[:, m : 2 * m],
        diagnostics=diagnostics,
    )


def wave_energy_audit(
    traj: WaveTrajectory,
    problem: HyperbolicProblem,
    control: StepControl = StepControl(),
) -> WaveEnergyReport:
    """Check the energy slope bound and the uniform estimates on one run.

    The energy is the squared velocity norm plus the quadratic form of
    the elliptic symbol on the position.  For positive damping the
    slope of the energy between recorded times must stay below the
    squared forcing norm divided by twice the damping; with zero
    damping and nonzero forcing that bound is marked not applicable
    rather than checked.
    """
    if traj.n_times < 1:
        raise ConfigurationError("trajectory is empty")
    runner = WaveRunner(problem)
    nu = problem.damping
    n_times = traj.n_times
    vel_sq = np.einsum("km,km->k", traj.velocities, traj.velocities)
    pos_sq = np.einsum("km,km->k", traj.positions, traj.positions)
    quad_pos = np.einsum(
        "km,m,km->k", traj.positions, runner.a_diag, traj.positions
    )
    energy = vel_sq + quad_pos
    nonlinear = np.empty(n_times)
    work = np.empty(n_times)
    f_sq = np.empty(n_times)
    for k in range(n_times):
        _, _, nonlinear[k], work[k] = runner.terms(
            traj.times[k], traj.positions[k], traj.velocities[k]
        )
        f_sq[k] = runner.forcing_norm_sq(traj.times[k])

    i_kin = traj.diagnostics["kinetic_integral"]
    i_nl = traj.diagnostics["nonlinear_dissipation_integral"]
    i_work = traj.diagnostics["forcing_work_integral"]
    identity_residuals = 0.5 * np.diff(energy) + (
        nu * np.diff(i_kin) + np.diff(i_nl) - np.diff(i_work)
    )
    scale = max(float(np.max(energy)), 1.0)
    identity_tol = 10.0 * (control.rtol * scale + control.atol)
    identity_violations = np.abs(identity_residuals) > identity_tol

    forcing_present = bool(np.any(f_sq > 0))
    slope_residuals = None
    slope_violations = None
    bound_m = None
    bound_applicable = True
    integral_ok = None
    damped_form = None
    dt = np.diff(traj.times)
    if nu > 0:
        allowed = (f_sq[:-1] + f_sq[1:]) / (4.0 * nu)
        slope_residuals = np.diff(energy) / dt - allowed
        slope_violations = slope_residuals > identity_tol / np.minimum(dt, 1.0)
        f_sq_integral = float(np.trapezoid(f_sq, traj.times))
        bound_m = float(energy[0]) + f_sq_integral / (2.0 * nu)
        damped_form = work - f_sq / (4.0 * nu) - nu * vel_sq
    elif forcing_present:
        bound_applicable = False
        slope_residuals = None
    else:
        bound_m = float(energy[0])
        slope_residuals = np.diff(energy) / dt
        slope_violations = slope_residuals > identity_tol / np.minimum(dt, 1.0)

    if bound_m is not None and traj.times[-1] > 0:
        integral_ok = bool(
            i_kin[-1] <= bound_m * float(traj.times[-1]) + identity_tol
        )

    return WaveEnergyReport(
        times=traj.times,
        energy=energy,
        velocity_l2_sq=vel_sq,
        position_l2_sq=pos_sq,
        nonlinear_dissipation=nonlinear,
        identity_residuals=identity_residuals,
        identity_tolerance=identity_tol,
        identity_violations=identity_violations,
        slope_residuals=slope_residuals,
        slope_violations=slope_violations,
        bound_applicable=bound_applicable,
        bound_m=bound_m,
        sup_velocity_sq=float(np.max(vel_sq)),
        sup_position_sq=float(np.max(pos_sq)),
        velocity_sq_integral=float(i_kin[-1]),
        integral_bound_satisfied=integral_ok,
        damped_form_residuals=damped_form,
    )


def velocity_consistency(traj: WaveTrajectory) -> float:
    """Largest defect of position increments against integrated velocity.

    Uses the trapezoid rule on the recorded times, so the residual of a
    well-resolved run shrinks quadratically in the output spacing.
    """
    if traj.n_times < 3:
        raise InsufficientDataError(
            "velocity consistency needs at least three recorded times"
        )
    integrated = cumulative_trapezoid(
        traj.velocities, traj.times, axis=0, initial=0.0
    )
    defect = traj.positions - traj.positions[0] - integrated
    return float(np.max(np.linalg.norm(defect, axis=1)))
