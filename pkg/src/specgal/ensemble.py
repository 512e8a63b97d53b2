"""Gaussian random initial data, solver ensembles, and their statistics.

Initial conditions are sampled from a trace-class correlation kernel
expressed in spectral coordinates.  Ensembles of diffusion solves share
one recording grid; the module estimates the characteristic functional
of the ensemble (the expectation of a unit-modulus exponential of a
time-integrated pairing with a probe) together with mean and two-point
moment statistics.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import (
    Grid,
    PhysicalField,
    SpectralBasis,
    SpectralField,
    synthesize,
)
from .errors import (
    ConfigurationError,
    EnsembleError,
    GridMismatchError,
    IntegrationError,
    KernelError,
    NotTraceClassError,
    NumericError,
)
from .integrate import StepControl, default_record_times
from .parabolic import ParabolicProblem, ParabolicRunner, _integrate_with_runner

DEFAULT_TRACE_CEILING = 1e8


def member_rng(seed: int) -> np.random.Generator:
    """Counter-based random stream keyed by a member seed."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def kernel_spectral_coeffs(kernel, basis: SpectralBasis) -> np.ndarray:
    """Spectral coefficient matrix of a correlation kernel.

    ``kernel`` is either a 1D array of per-mode variances or a callable
    ``K(x, y)`` taking broadcastable point arrays of shape (..., d).
    The callable path runs a double quadrature on the dealiased grid
    and symmetrizes the result.
    """
    if callable(kernel):
        grid = basis.default_grid()
        points = grid.points()
        k_values = kernel(points[:, None, :], points[None, :, :])
        k_values = np.asarray(k_values, dtype=float)
        if k_values.shape != (points.shape[0], points.shape[0]):
            raise KernelError("kernel callable returned a misshaped array")
        asym = np.max(np.abs(k_values - k_values.T))
        scale = max(np.max(np.abs(k_values)), 1.0)
        if asym > 1e-8 * scale:
            raise KernelError(
                f"kernel is not symmetric: max asymmetry {asym:.3e}"
            )
        weighted_modes = basis.mode_matrix(points) * grid.weight_tensor.reshape(
            -1, 1
        )
        matrix = weighted_modes.T @ k_values @ weighted_modes
        return 0.5 * (matrix + matrix.T)
    diag = np.asarray(kernel, dtype=float).reshape(-1)
    if diag.size != basis.n_modes:
        raise GridMismatchError("diagonal kernel does not match the basis size")
    return np.diag(diag)


class KernelSpec:
    """Trace-class correlation kernel in spectral coordinates.

    Accepts a full symmetric matrix or a diagonal of per-mode
    variances.  Eigenvalues in ``[-psd_tol, 0)`` are treated as
    quadrature noise and clipped to zero; anything below ``-psd_tol``
    rejects the kernel.
    """

    def __init__(self, basis: SpectralBasis, matrix=None, diagonal=None,
                 psd_tol: float = 1e-10):
        if (matrix is None) == (diagonal is None):
            raise ConfigurationError(
                "provide exactly one of matrix or diagonal"
            )
        self.basis = basis
        if diagonal is not None:
            diag = np.asarray(diagonal, dtype=float).reshape(-1)
            if diag.size != basis.n_modes:
                raise GridMismatchError(
                    "diagonal kernel does not match the basis size"
                )
            if np.any(diag < -psd_tol):
                raise KernelError("diagonal kernel has negative variances")
            matrix = np.diag(np.clip(diag, 0.0, None))
        else:
            matrix = np.asarray(matrix, dtype=float)
            if matrix.shape != (basis.n_modes, basis.n_modes):
                raise GridMismatchError(
                    "kernel matrix does not match the basis size"
                )
            scale = max(np.max(np.abs(matrix)), 1.0)
            asym = np.max(np.abs(matrix - matrix.T))
            if asym > 1e-8 * scale:
                raise KernelError(
                    f"kernel matrix is not symmetric: asymmetry {asym:.3e}"
                )
            matrix = 0.5 * (matrix + matrix.T)
            eigenvalues, vectors = np.linalg.eigh(matrix)
            tol = psd_tol * max(1.0, float(np.max(np.abs(eigenvalues))))
            if np.any(eigenvalues < -tol):
                raise KernelError(
                    "kernel matrix has a negative eigenvalue "
                    f"{eigenvalues.min():.3e} beyond tolerance"
                )
            clipped = np.clip(eigenvalues, 0.0, None)
            matrix = (vectors * clipped) @ vectors.T
            matrix = 0.5 * (matrix + matrix.T)
        matrix = np.asarray(matrix, dtype=float)
        matrix.setflags(write=False)
        self.matrix = matrix

    @classmethod
    def from_callable(cls, kernel, basis: SpectralBasis, **kwargs) -> "KernelSpec":
        return cls(basis, matrix=kernel_spectral_coeffs(kernel, basis), **kwargs)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @cached_property
    def factor(self) -> np.ndarray:
        """Matrix square root used for sampling; Cholesky when it exists."""
        try:
            return np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError:
            pass
        try:
            eigenvalues, vectors = np.linalg.eigh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise KernelError(f"kernel factorization failed: {exc}") from exc
        if np.any(eigenvalues < -1e-8 * max(1.0, eigenvalues.max(initial=0.0))):
            raise KernelError("kernel lost positive semidefiniteness")
        return vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))

    def point_covariance(self, x, y) -> float:
        """Covariance K(x, y) reconstructed from the spectral matrix."""
        phi = self.basis.mode_matrix(np.vstack([np.atleast_1d(x),
                                                np.atleast_1d(y)]))
        return float(phi[0] @ self.matrix @ phi[1])


def trace_of_kernel(spec: KernelSpec, ceiling: float = DEFAULT_TRACE_CEILING) -> float:
    """Spectral trace of the kernel, gated by an admissibility ceiling."""
    value = spec.trace
    if not math.isfinite(value) or value > ceiling:
        raise NotTraceClassError(
            f"kernel trace {value:.6g} exceeds the ceiling {ceiling:.6g}"
        )
    return value


def sample_initial_condition(kernel: KernelSpec, seed: int) -> SpectralField:
    """One Gaussian field with the kernel as coefficient covariance.

    Deterministic per seed: the draw is the cached factor applied to a
    standard normal vector from a stream keyed by the seed.
    """
    rng = member_rng(seed)
    z = rng.standard_normal(kernel.basis.n_modes)
    return SpectralField(kernel.basis, kernel.factor @ z)


@dataclass(frozen=True)
class Ensemble:
    """Trajectories of independent solves with seed-keyed initial data."""

    basis: SpectralBasis
    kernel: KernelSpec
    times: np.ndarray
    states: np.ndarray  # (n_members, n_times, n_modes)
    seeds: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def n_members(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class CharacteristicProbe:
    """Piecewise-constant-in-time spectral probe on a recording grid.

    ``coefficients[k]`` applies on the interval
    ``[times[k], times[k + 1])``, so there is one row fewer than there
    are recorded times.
    """

    times: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != times.size - 1:
            raise GridMismatchError(
                "probe needs one coefficient row per recording interval"
            )
        if not np.all(np.isfinite(coeffs)):
            raise NumericError("probe coefficients must be finite")
        times.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coefficients", coeffs)


@dataclass(frozen=True)
class MomentReport:
    """Ensemble moments: mean coefficients, probe estimates, two-point rows."""

    times: np.ndarray
    mean_coefficients: np.ndarray
    probe_estimates: list
    two_point: list


def run_ensemble(
    problem: ParabolicProblem,
    kernel: KernelSpec,
    n_samples: int,
    base_seed: int,
    control: StepControl = StepControl(),
    record_times=None,
    workers: int = 1,
    max_failure_fraction: float = 0.1,
) -> Ensemble:
    """Integrate ``n_samples`` solves seeded ``base_seed .. base_seed+n-1``.

    Member streams are keyed by their seed, so results do not depend on
    the worker count or scheduling.  The ensemble fails only when more
    than ``max_failure_fraction`` of its members fail to integrate.
    """
    if n_samples < 1:
        raise ConfigurationError("n_samples must be at least 1")
    if kernel.basis.spec != problem.basis.spec:
        raise GridMismatchError("kernel basis does not match the problem basis")
    times = (
        default_record_times(problem.horizon)
        if record_times is None
        else np.asarray(record_times, dtype=float)
    )
    runner = ParabolicRunner(problem)
    seeds = np.arange(base_seed, base_seed + n_samples)

    def solve_member(seed):
        initial = sample_initial_condition(kernel, int(seed))
        traj = _integrate_with_runner(runner, initial, control, times)
        return traj.coefficients

    results: dict = {}
    failures: dict = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {int(seed): pool.submit(solve_member, seed) for seed in seeds}
        for seed, fut in futures.items():
            try:
                results[seed] = fut.result()
            except (IntegrationError, NumericError) as exc:
                failures[seed] = str(exc)
    else:
        for seed in seeds:
            try:
                results[int(seed)] = solve_member(seed)
            except (IntegrationError, NumericError) as exc:
                failures[int(seed)] = str(exc)

    if len(failures) > max_failure_fraction * n_samples:
        raise EnsembleError(
            f"{len(failures)} of {n_samples} ensemble members failed"
        )
    ok_seeds = np.array(sorted(results.keys()))
    states = np.stack([results[s] for s in ok_seeds])
    return Ensemble(
        basis=problem.basis,
        kernel=kernel,
        times=times,
        states=states,
        seeds=ok_seeds,
        failures=failures,
    )


def random_probes(
    basis: SpectralBasis,
    times,
    count: int,
    seed: int,
    amplitude: float = 1.0,
) -> list:
    """Independent Gaussian probes on a recording grid, keyed by seed."""
    times = np.asarray(times, dtype=float)
    rng = member_rng(seed)
    return [
        CharacteristicProbe(
            times, amplitude * rng.standard_normal((times.size - 1, basis.n_modes))
        )
        for _ in range(count)
    ]


def estimate_characteristic_functional(
    ens: Ensemble, probe: CharacteristicProbe
):
    """Monte Carlo estimate of the characteristic functional at a probe.

    The pairing integral uses the left-endpoint rule on the recording
    intervals, matching the piecewise-constant probe convention.  The
    zero probe gives exactly 1; every estimate has modulus at most 1.
    Returns ``(estimate, stderr)``.
    """
    if not np.array_equal(probe.times, ens.times):
        raise GridMismatchError("probe time grid must match the ensemble grid")
    dt = np.diff(ens.times)
    phases = np.einsum("nkm,km,k->n", ens.states[:, :-1, :],
                       probe.coefficients, dt)
    samples = np.exp(1j * phases)
    estimate = complex(samples.mean())
    n = samples.size
    if n > 1:
        var = samples.real.var(ddof=1) + samples.imag.var(ddof=1)
        stderr = math.sqrt(var / n)
    else:
        stderr = math.inf
    return estimate, stderr


def estimate_two_point(ens: Ensemble, x, y, t: float):
    """Sample covariance of the field at two points and one recorded time.

    Returns ``(covariance, stderr)``; refuses times off the recording
    grid rather than interpolating.
    """
    matches = np.nonzero(np.isclose(ens.times, t, rtol=0.0, atol=1e-12))[0]
    if matches.size == 0:
        raise GridMismatchError(
            f"time {t} is not on the ensemble recording grid"
        )
    index = int(matches[0])
    phi = ens.basis.mode_matrix(
        np.vstack([np.atleast_1d(x), np.atleast_1d(y)])
    )
    u_x = ens.states[:, index, :] @ phi[0]
    u_y = ens.states[:, index, :] @ phi[1]
    n = u_x.size
    if n < 2:
        raise ConfigurationError("two-point estimates need at least 2 members")
    products = (u_x - u_x.mean()) * (u_y - u_y.mean())
    covariance = float(products.sum() / (n - 1))
    stderr = float(products.std(ddof=1) / math.sqrt(n))
    return covariance, stderr


def ensemble_moment_report(
    ens: Ensemble, probes=(), points=()
) -> MomentReport:
    """Bundle mean coefficients, probe estimates, and two-point rows."""
    probe_rows = [estimate_characteristic_functional(ens, p) for p in probes]
    two_point_rows = [
        (x, y, t) + estimate_two_point(ens, x, y, t) for (x, y, t) in points
    ]
    return MomentReport(
        times=ens.times,
        mean_coefficients=ens.states.mean(axis=0),
        probe_estimates=probe_rows,
        two_point=two_point_rows,
    )


def sample_lognormal_potential(
    v0: float,
    coupling: float,
    kernel: KernelSpec,
    basis: SpectralBasis,
    seed: int,
    grid: Grid | None = None,
) -> PhysicalField:
    """Strictly positive random potential of exponential form.

    Samples a Gaussian field from the kernel, synthesizes it on the
    grid, and exponentiates: ``V(x) = v0 * exp(coupling * a(x))``.
    """
    if not v0 > 0:
        raise ConfigurationError("background level v0 must be positive")
    if coupling < 0:
        raise ConfigurationError("coupling must be nonnegative")
    if kernel.basis.spec != basis.spec:
        raise GridMismatchError("kernel basis does not match the target basis")
    gaussian = sample_initial_condition(kernel, seed)
    sampled = synthesize(SpectralField(basis, gaussian.coefficients), grid)
    return PhysicalField(sampled.grid, v0 * np.exp(coupling * sampled.values))
