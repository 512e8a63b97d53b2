"""Shared adaptive time integration for the Galerkin ODE systems."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigurationError, IntegrationError


@dataclass(frozen=True)
class StepControl:
    """Tolerances and method for the embedded Runge-Kutta integrator."""

    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "RK45"
    max_step: float = math.inf

    def scaled(self, factor: float) -> "StepControl":
        """Same control with both tolerances multiplied by ``factor``."""
        return StepControl(
            rtol=self.rtol * factor,
            atol=self.atol * factor,
            method=self.method,
            max_step=self.max_step,
        )


def default_record_times(horizon: float, points: int = 65) -> np.ndarray:
    return np.linspace(0.0, horizon, points)


def check_record_times(record_times, horizon: float) -> np.ndarray:
    times = np.asarray(record_times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ConfigurationError("record times must be a 1D array")
    if times[0] != 0.0:
        raise ConfigurationError("record times must start at 0")
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("record times must be strictly increasing")
    if times[-1] > horizon * (1 + 1e-12):
        raise ConfigurationError("record times exceed the horizon")
    return times


def integrate_ode(rhs, y0, horizon, record_times, control: StepControl):
    """Integrate ``y' = rhs(t, y)`` on [0, horizon], sampling at record_times.

    Returns ``(times, states)`` with states of shape (n_times, n_dims).
    Raises IntegrationError carrying the last good time when the
    adaptive stepper stalls.
    """
    times = check_record_times(record_times, horizon)
    solution = solve_ivp(
        rhs,
        (0.0, float(horizon)),
        np.asarray(y0, dtype=float),
        method=control.method,
        rtol=control.rtol,
        atol=control.atol,
        max_step=control.max_step,
        t_eval=times,
        dense_output=False,
    )
    if not solution.success:
        last = float(solution.t[-1]) if solution.t.size else 0.0
        raise IntegrationError(
            f"time integration failed: {solution.message}", last_good_time=last
        )
    return solution.t, solution.y.T
