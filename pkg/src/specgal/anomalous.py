"""Fractional-Laplacian evolution, admissibility bounds, and damped waves.

A torus of large side stands in for free space: fractional powers of
the Laplacian are exact diagonal multipliers there.  The module also
computes the dimensional constant controlling when a square-integrable
potential is relatively bounded by the fractional Laplacian, evolves
the diffusion field by Strang splitting between the diagonal semigroup
and the pointwise local terms, and propagates damped waves through
operator trigonometric functions of a truncated spectral matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .basis import (
    DIRICHLET_CUBE,
    PERIODIC_TORUS,
    GridTransform,
    PhysicalField,
    SpectralBasis,
    SpectralField,
)
from .errors import (
    ConfigurationError,
    DivergentIntegralError,
    GridMismatchError,
    InstabilityError,
    LinearAlgebraError,
    PoleError,
)
from .nonlinearity import NonlinearityProfile

BLOWUP_GUARD = 1e12
DEFAULT_TRUNCATION = 512


def _sphere_surface(dim: int) -> float:
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def kato_rellich_constant(alpha: float, dim: int, epsrel: float = 1e-10) -> float:
    """Value of the admissibility integral over momentum space.

    Integrates ``(1 + |k|^(2 alpha))^(-2)`` over dimension ``dim``,
    which converges exactly when ``alpha > dim / 4``.  The radial
    integral is split at 1 with an inversion substitution for the tail
    so both pieces are proper.
    """
    if dim not in (1, 2, 3):
        raise ConfigurationError("dimension must be 1, 2, or 3")
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ConfigurationError("alpha must be positive and finite")
    if alpha <= dim / 4.0:
        raise DivergentIntegralError(
            f"alpha={alpha} <= dim/4={dim / 4.0}: the admissibility "
            "integral diverges"
        )

    def head(r):
        return r ** (dim - 1) / (1.0 + r ** (2.0 * alpha)) ** 2

    def tail(u):
        # r = 1/u maps [1, inf) to (0, 1]
        return u ** (4.0 * alpha - dim - 1) / (1.0 + u ** (2.0 * alpha)) ** 2

    head_val, _ = quad(head, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=200)
    tail_val, _ = quad(tail, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=200)
    return _sphere_surface(dim) * (head_val + tail_val)


@dataclass(frozen=True)
class KatoRellichReport:
    """Relative-bound coefficients of a potential against the operator."""

    alpha: float
    dim: int
    constant: float
    potential_norm: float
    scale: float
    bound_a: float
    bound_b: float
    min_scale: float
    admissible: bool


def relative_bound(
    potential_norm: float, alpha: float, dim: int, scale: float
) -> KatoRellichReport:
    """Relative-bound coefficients ``(a, b)`` at a chosen scale.

    ``a = |V| C r^(d/2 - 2 alpha)`` and ``b = |V| C r^(d/2)``; since the
    exponent of ``a`` is negative for admissible alpha, any scale above
    ``(|V| C)^(2 / (4 alpha - d))`` forces ``a < 1``.  That threshold is
    returned as ``min_scale``.
    """
    if potential_norm < 0:
        raise ConfigurationError("potential norm must be nonnegative")
    if not scale > 0:
        raise ConfigurationError("scale must be positive")
    constant = kato_rellich_constant(alpha, dim)
    prod = potential_norm * constant
    bound_a = prod * scale ** (dim / 2.0 - 2.0 * alpha)
    bound_b = prod * scale ** (dim / 2.0)
    min_scale = prod ** (2.0 / (4.0 * alpha - dim)) if prod > 0 else 0.0
    return KatoRellichReport(
        alpha=alpha,
        dim=dim,
        constant=constant,
        potential_norm=potential_norm,
        scale=scale,
        bound_a=bound_a,
        bound_b=bound_b,
        min_scale=min_scale,
        admissible=bound_a < 1.0,
    )


def kato_rellich_report(
    potential_norm: float, alpha: float, dim: int, scale: float | None = None
) -> KatoRellichReport:
    """Report builder that marks divergent exponents instead of raising."""
    try:
        constant = kato_rellich_constant(alpha, dim)
    except DivergentIntegralError:
        return KatoRellichReport(
            alpha=alpha,
            dim=dim,
            constant=math.inf,
            potential_norm=potential_norm,
            scale=scale if scale is not None else math.nan,
            bound_a=math.inf,
            bound_b=math.inf,
            min_scale=math.inf,
            admissible=False,
        )
    prod = potential_norm * constant
    if scale is None:
        min_scale = prod ** (2.0 / (4.0 * alpha - dim)) if prod > 0 else 0.0
        scale = 1.5 * min_scale if min_scale > 0 else 1.0
    return relative_bound(potential_norm, alpha, dim, scale)


@dataclass(frozen=True)
class FractionalOperatorSpec:
    """Fractional diffusion operator with optional potential and coupling."""

    alpha: float
    diffusivity: float
    potential: PhysicalField | None = None
    coupling: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigurationError("alpha must be positive and finite")
        if not (self.diffusivity > 0 and math.isfinite(self.diffusivity)):
            raise ConfigurationError("diffusivity must be positive and finite")


def evolve_fractional(
    initial: SpectralField,
    spec: FractionalOperatorSpec,
    profile: NonlinearityProfile | None,
    t: float,
    steps: int,
) -> SpectralField:
    """Strang-split evolution of the fractional diffusion field.

    Each step applies half of the diagonal semigroup, solves the local
    part ``du/dt = V u + coupling * F(u)`` pointwise on the dealiased
    grid, then applies the second diagonal half-step.  When the
    coupling vanishes the local solve is the exact exponential, so the
    splitting is exact for constant potentials.  Second-order accurate
    in the step size otherwise.
    """
    basis = initial.basis
    if basis.spec.domain_kind != PERIODIC_TORUS:
        raise ConfigurationError(
            "fractional evolution expects a periodic basis"
        )
    if steps < 1:
        raise ConfigurationError("steps must be at least 1")
    if not (t >= 0 and math.isfinite(t)):
        raise ConfigurationError("time must be nonnegative and finite")
    transform = GridTransform(basis)
    if spec.potential is None:
        potential = np.zeros(transform.grid.shape)
    else:
        if not spec.potential.grid.matches(transform.grid):
            raise GridMismatchError(
                "potential must be sampled on the dealiased default grid"
            )
        potential = spec.potential.values
    h = t / steps
    half_decay = np.exp(-0.5 * h * spec.diffusivity * basis.eigenvalues ** spec.alpha)
    nonlinear = profile is not None and spec.coupling != 0.0
    # constant potentials commute with the diagonal part; the local flow
    # is then an exact scalar exponential on the coefficients
    constant_level = None
    if not nonlinear and np.ptp(potential) == 0.0:
        constant_level = float(potential.flat[0]) if potential.size else 0.0
        with np.errstate(over="ignore"):
            # overflow becomes inf and trips the blow-up guard below
            local_factor = float(np.exp(h * constant_level))

    def local_rate(coeffs):
        # Galerkin projection of the local terms keeps the split flow a
        # fixed vector field on the retained coefficients
        values = transform.to_grid(coeffs)
        if nonlinear:
            f_values, _ = profile.evaluate(values)
            values = potential * values + spec.coupling * f_values
        else:
            values = potential * values
        return transform.to_coefficients(values)

    coeffs = initial.coefficients.copy()
    for _ in range(steps):
        coeffs = coeffs * half_decay
        if constant_level is not None:
            coeffs = coeffs * local_factor
        else:
            coeffs = _rk4(local_rate, coeffs, h)
        coeffs = coeffs * half_decay
        norm = np.linalg.norm(coeffs)
        if not np.isfinite(norm) or norm > BLOWUP_GUARD:
            raise InstabilityError(
                f"field norm {norm:.3e} exceeded the blow-up guard"
            )
    return SpectralField(basis, coeffs)


def _rk4(rate, state, h, substeps: int = 2):
    dt = h / substeps
    for _ in range(substeps):
        k1 = rate(state)
        k2 = rate(state + 0.5 * dt * k1)
        k3 = rate(state + 0.5 * dt * k2)
        k4 = rate(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return state


def free_propagator(omega: float, k_mag: float, diffusivity: float,
                    alpha: float) -> complex:
    """Momentum-space resolvent ``1 / (i omega - D |k|^(2 alpha))``."""
    decay = diffusivity * k_mag ** (2.0 * alpha)
    if omega == 0.0 and decay == 0.0:
        raise PoleError("free propagator evaluated at omega = k = 0")
    return 1.0 / complex(-decay, omega)


@dataclass(frozen=True)
class DampedWaveProblem:
    """Wave equation with spatially varying damping and fractional stiffness.

    The damping enters the propagator through the shifted quadratic
    form ``lam^alpha - damping^2 / 4``, whose spectrum may change sign;
    both the trigonometric and hyperbolic branches are handled.
    """

    basis: SpectralBasis
    alpha: float
    damping: object  # float or PhysicalField
    initial_position: SpectralField
    initial_velocity: SpectralField
    truncation: int | None = None

    def __post_init__(self):
        if self.basis.spec.domain_kind not in (DIRICHLET_CUBE, PERIODIC_TORUS):
            raise ConfigurationError("unsupported basis kind")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigurationError("alpha must be positive and finite")
        if self.truncation is not None and not (
            1 <= self.truncation <= self.basis.n_modes
        ):
            raise ConfigurationError(
                "truncation must lie between 1 and the basis size"
            )
        if isinstance(self.damping, PhysicalField):
            if np.any(self.damping.values < 0):
                raise ConfigurationError("damping must be nonnegative")
        elif not (float(self.damping) >= 0):
            raise ConfigurationError("damping must be nonnegative")
        if self.initial_position.basis.spec != self.basis.spec:
            raise GridMismatchError("initial position basis mismatch")
        if self.initial_velocity.basis.spec != self.basis.spec:
            raise GridMismatchError("initial velocity basis mismatch")


def _trig_branches(mu: np.ndarray, t: float):
    """cos(t sqrt(mu)) and sin(t sqrt(mu))/sqrt(mu) on both branches.

    Negative arguments switch to the hyperbolic pair; near zero the
    sine quotient uses its series to stay smooth.
    """
    cos_vals = np.empty_like(mu)
    sinc_vals = np.empty_like(mu)
    tiny = 1e-12
    positive = mu > tiny
    negative = mu < -tiny
    small = ~(positive | negative)
    root_pos = np.sqrt(mu[positive])
    cos_vals[positive] = np.cos(t * root_pos)
    sinc_vals[positive] = np.sin(t * root_pos) / root_pos
    root_neg = np.sqrt(-mu[negative])
    cos_vals[negative] = np.cosh(t * root_neg)
    sinc_vals[negative] = np.sinh(t * root_neg) / root_neg
    mu_small = mu[small]
    cos_vals[small] = 1.0 - mu_small * t ** 2 / 2.0
    sinc_vals[small] = t * (1.0 - mu_small * t ** 2 / 6.0)
    return cos_vals, sinc_vals


def damped_wave_propagate(problem: DampedWaveProblem, t: float):
    """Propagate the damped wave to time ``t``.

    Solves the undamped companion problem for the rescaled field
    through a symmetric eigendecomposition of the truncated operator
    matrix, then undoes the damping change of variables pointwise.
    Returns ``(field, companion)`` as physical fields.
    """
    if not (t >= 0 and math.isfinite(t)):
        raise ConfigurationError("time must be nonnegative and finite")
    basis = problem.basis
    transform = GridTransform(basis)
    grid = transform.grid
    if isinstance(problem.damping, PhysicalField):
        if not problem.damping.grid.matches(grid):
            raise GridMismatchError(
                "damping field must be sampled on the dealiased default grid"
            )
        nu_values = problem.damping.values
    else:
        nu_values = np.full(grid.shape, float(problem.damping))

    size = problem.truncation
    if size is None:
        size = min(basis.n_modes, DEFAULT_TRUNCATION)
    order = np.argsort(basis.eigenvalues, kind="stable")[:size]

    # projected multiplication operator for damping^2 / 4, one column at a time
    quarter_sq = 0.25 * nu_values ** 2
    n_modes = basis.n_modes
    columns = np.empty((size, size))
    unit = np.zeros(n_modes)
    for col, mode in enumerate(order):
        unit[mode] = 1.0
        mode_values = transform.to_grid(unit)
        columns[:, col] = transform.to_coefficients(quarter_sq * mode_values)[order]
        unit[mode] = 0.0
    operator = np.diag(basis.eigenvalues[order] ** problem.alpha) - columns
    asym = np.max(np.abs(operator - operator.T))
    if asym > 1e-10 * max(1.0, np.max(np.abs(operator))):
        raise LinearAlgebraError(
            f"projected operator lost symmetry: {asym:.3e}"
        )
    operator = 0.5 * (operator + operator.T)
    try:
        mu, vectors = np.linalg.eigh(operator)
    except np.linalg.LinAlgError as exc:
        raise LinearAlgebraError(f"eigendecomposition failed: {exc}") from exc

    f_sel = problem.initial_position.coefficients[order]
    position_values = transform.to_grid(problem.initial_position.coefficients)
    shifted = transform.to_coefficients(0.5 * nu_values * position_values)
    g_bar = shifted[order] + problem.initial_velocity.coefficients[order]

    cos_vals, sinc_vals = _trig_branches(mu, t)
    companion_sel = vectors @ (cos_vals * (vectors.T @ f_sel)) + vectors @ (
        sinc_vals * (vectors.T @ g_bar)
    )
    companion_coeffs = np.zeros(n_modes)
    companion_coeffs[order] = companion_sel
    companion_values = transform.to_grid(companion_coeffs)
    field_values = np.exp(-0.5 * nu_values * t) * companion_values
    return (
        PhysicalField(grid, field_values),
        PhysicalField(grid, companion_values),
    )
