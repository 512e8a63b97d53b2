"""Scalar nonlinearities with strictly positive derivative.

A profile packages a function F, its derivative F', and two-sided
Lipschitz bounds over an explicit clamp interval.  Three families are
provided: a linear profile for oracle tests, an exponential-diffusivity
profile, and a regularized power law for gas flow through a porous
medium with saturation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericError

LINEAR = "linear"
EXPONENTIAL = "exponential"
REGULARIZED_POWER = "regularized-power"

# fixed Gauss-Legendre rule for antiderivatives without a closed form
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True)
class PorousMediumParams:
    """Constants of the saturated porous-medium diffusion model.

    ``pressure_constant`` and ``permeability`` come from the isothermal
    equation of state and Darcy's law; ``exponent`` is the power of the
    density in the diffusivity, ``epsilon`` the smoothing scale, and
    ``saturation`` the maximum admissible density.
    """

    exponent: float
    pressure_constant: float
    permeability: float
    epsilon: float
    saturation: float

    def __post_init__(self):
        values = (
            self.exponent,
            self.pressure_constant,
            self.permeability,
            self.epsilon,
            self.saturation,
        )
        if not all(v > 0 and math.isfinite(v) for v in values):
            raise ConfigurationError(
                "porous-medium parameters must all be positive and finite"
            )


@dataclass(frozen=True)
class NonlinearityProfile:
    """F and F' with positive-slope and Lipschitz bounds on a clamp interval.

    Inputs outside ``clamp`` are clamped before evaluation, so the
    bounds ``inf_slope`` and ``sup_slope`` hold everywhere the profile
    is actually evaluated.
    """

    kind: str
    clamp: tuple
    inf_slope: float
    sup_slope: float
    _f: Callable = field(repr=False)
    _fp: Callable = field(repr=False)

    def __post_init__(self):
        lo, hi = self.clamp
        if not lo < hi:
            raise ConfigurationError("clamp interval must have u_lo < u_hi")
        if not (self.inf_slope > 0 and np.isfinite(self.sup_slope)):
            raise ConfigurationError(
                "slope bounds must be positive and finite on the clamp interval"
            )

    def evaluate(self, u):
        """Return ``(F, F')`` at the clamped argument.

        Accepts scalars or arrays; the derivative is strictly positive.
        """
        arr = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NumericError("nonlinearity evaluated at a non-finite value")
        clamped = np.clip(arr, self.clamp[0], self.clamp[1])
        f_val = self._f(clamped)
        fp_val = self._fp(clamped)
        if arr.ndim == 0:
            return float(f_val), float(fp_val)
        return f_val, fp_val

    def lipschitz_bounds(self):
        """Two-sided slope bounds ``(m, L)`` over the clamp interval.

        ``m * |u - v| <= |F(u) - F(v)| <= L * |u - v|`` for clamped
        arguments.
        """
        return self.inf_slope, self.sup_slope


def make_linear_profile(c: float) -> NonlinearityProfile:
    """Profile with F(u) = c*u, so F' is the constant c."""
    if not (c > 0 and math.isfinite(c)):
        raise ConfigurationError("linear slope must be positive and finite")
    return NonlinearityProfile(
        kind=LINEAR,
        clamp=(-math.inf, math.inf),
        inf_slope=c,
        sup_slope=c,
        _f=lambda u: c * u,
        _fp=lambda u: np.full_like(np.asarray(u, dtype=float), c),
    )


def make_exponential_profile(
    k0: float, clamp: tuple = (-20.0, 20.0)
) -> NonlinearityProfile:
    """Exponential diffusivity: F'(u) = k0/2 + exp(-u).

    F is the antiderivative (k0/2)*u - exp(-u).  F' is strictly
    decreasing, so the slope bounds sit at the clamp endpoints.
    """
    if not (k0 > 0 and math.isfinite(k0)):
        raise ConfigurationError("k0 must be positive and finite")
    lo, hi = clamp
    return NonlinearityProfile(
        kind=EXPONENTIAL,
        clamp=(float(lo), float(hi)),
        inf_slope=k0 / 2.0 + math.exp(-hi),
        sup_slope=k0 / 2.0 + math.exp(-lo),
        _f=lambda u: 0.5 * k0 * u - np.exp(-u),
        _fp=lambda u: 0.5 * k0 + np.exp(-u),
    )


def make_regularized_power_profile(
    params: PorousMediumParams,
) -> NonlinearityProfile:
    """Smoothed power-law diffusivity on the density range [0, saturation].

    The diffusivity D(rho) = (rho^2 + eps^2)^(gamma/2) is a smooth,
    strictly positive stand-in for rho^gamma; the profile slope is
    gamma * c * k * D(rho) and F is its antiderivative with F(0) = 0,
    evaluated by fixed-order Gauss-Legendre quadrature.
    """
    gamma = params.exponent
    scale = params.exponent * params.pressure_constant * params.permeability
    eps_sq = params.epsilon ** 2

    def slope(u):
        return scale * (np.asarray(u, dtype=float) ** 2 + eps_sq) ** (gamma / 2.0)

    def antiderivative(u):
        # substitute rho = eps * sinh(s): the integrand becomes a power
        # of cosh, an entire function, so the fixed rule converges fast
        # even for small eps
        u_arr = np.asarray(u, dtype=float)
        s_max = np.arcsinh(u_arr / params.epsilon)
        half = s_max[..., None] / 2.0
        nodes = half * (_GL_NODES + 1.0)
        vals = np.cosh(nodes) ** (gamma + 1.0)
        integral = (vals * _GL_WEIGHTS).sum(axis=-1) * half[..., 0]
        return np.squeeze(scale * params.epsilon ** (gamma + 1.0) * integral)

    top = params.saturation
    return NonlinearityProfile(
        kind=REGULARIZED_POWER,
        clamp=(0.0, float(top)),
        inf_slope=scale * params.epsilon ** gamma,
        sup_slope=scale * (top ** 2 + eps_sq) ** (gamma / 2.0),
        _f=antiderivative,
        _fp=slope,
    )
