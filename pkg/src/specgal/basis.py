"""Laplacian eigenbases on box domains and the associated transforms.

Two geometries are supported: a cube with homogeneous Dirichlet walls
(orthonormal sine products) and a flat torus (orthonormal real
trigonometric modes).  Fields live either as coefficient vectors in a
basis (`SpectralField`) or as samples on a tensor-product quadrature
grid (`PhysicalField`).  Diagonal operators in the eigenbasis, such as
the Laplacian itself, spectral cutoffs, or fractional powers, are
applied through :func:`apply_spectral_multiplier`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import (
    ConfigurationError,
    GridMismatchError,
    NotApplicableError,
    NumericError,
)

DIRICHLET_CUBE = "dirichlet-cube"
PERIODIC_TORUS = "periodic-torus"


@dataclass(frozen=True)
class BasisSpec:
    """Geometry and resolution of a spectral basis.

    Parameters
    ----------
    domain_kind : str
        Either ``"dirichlet-cube"`` or ``"periodic-torus"``.
    side_length : float
        Edge length of the box, > 0.
    dimension : int
        Spatial dimension, 1 to 3.
    modes_per_axis : int
        Number of basis functions kept along each axis, >= 1.
    """

    domain_kind: str
    side_length: float
    dimension: int
    modes_per_axis: int

    def __post_init__(self):
        if self.domain_kind not in (DIRICHLET_CUBE, PERIODIC_TORUS):
            raise ConfigurationError(
                f"unknown domain kind {self.domain_kind!r}"
            )
        if not (self.side_length > 0 and math.isfinite(self.side_length)):
            raise ConfigurationError("side_length must be positive and finite")
        if self.dimension not in (1, 2, 3):
            raise ConfigurationError("dimension must be 1, 2, or 3")
        if self.modes_per_axis < 1:
            raise ConfigurationError("modes_per_axis must be at least 1")
        if self.modes_per_axis ** self.dimension > 2_000_000:
            raise ConfigurationError("total mode count is too large")


class SpectralBasis:
    """Orthonormal eigenbasis of the (negative) Laplacian on a box.

    Modes are tensor products of per-axis functions.  The flat mode
    ordering is C order over the per-axis indices, so coefficients
    reshape to ``(n,) * dimension``.
    """

    def __init__(self, spec: BasisSpec):
        self.spec = spec
        n = spec.modes_per_axis
        d = spec.dimension
        length = spec.side_length
        if spec.domain_kind == DIRICHLET_CUBE:
            # sqrt(2/L) sin(i pi x / L), labels i = 1..n
            self.axis_labels = np.arange(1, n + 1)
            self.axis_eigenvalues = (np.pi * self.axis_labels / length) ** 2
        else:
            # label 0 is the constant mode; odd labels are cosines and
            # even labels > 0 sines of wavenumber ceil(label/2)
            self.axis_labels = np.arange(n)
            wave = (self.axis_labels + 1) // 2
            self.axis_eigenvalues = (2.0 * np.pi * wave / length) ** 2
        grids = np.meshgrid(*([self.axis_eigenvalues] * d), indexing="ij")
        self.eigenvalues = sum(grids).reshape(-1)
        self.mode_indices = np.array(
            list(itertools.product(self.axis_labels, repeat=d)), dtype=int
        )
        self.eigenvalues.setflags(write=False)
        self.mode_indices.setflags(write=False)

    @property
    def n_modes(self) -> int:
        return self.spec.modes_per_axis ** self.spec.dimension

    def axis_values(self, positions: np.ndarray) -> np.ndarray:
        """Evaluate the per-axis basis functions at 1D positions.

        Returns an array of shape ``(len(positions), modes_per_axis)``.
        """
        x = np.asarray(positions, dtype=float)
        length = self.spec.side_length
        n = self.spec.modes_per_axis
        out = np.empty((x.size, n))
        if self.spec.domain_kind == DIRICHLET_CUBE:
            amp = math.sqrt(2.0 / length)
            for col, label in enumerate(self.axis_labels):
                out[:, col] = amp * np.sin(label * np.pi * x / length)
        else:
            amp = math.sqrt(2.0 / length)
            for col, label in enumerate(self.axis_labels):
                if label == 0:
                    out[:, col] = 1.0 / math.sqrt(length)
                    continue
                wave = (label + 1) // 2
                phase = 2.0 * np.pi * wave * x / length
                out[:, col] = amp * (np.cos(phase) if label % 2 else np.sin(phase))
        return out

    def mode_matrix(self, points: np.ndarray) -> np.ndarray:
        """Evaluate every mode at arbitrary points of shape ``(q, d)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.spec.dimension:
            raise GridMismatchError(
                f"points have dimension {pts.shape[1]}, "
                f"basis has {self.spec.dimension}"
            )
        result = np.ones((pts.shape[0], self.n_modes))
        for axis in range(self.spec.dimension):
            vals = self.axis_values(pts[:, axis])
            col = self.mode_indices[:, axis]
            if self.spec.domain_kind == DIRICHLET_CUBE:
                col = col - 1
            result *= vals[:, col]
        return result

    def mode_position(self, labels) -> int:
        """Flat index of the mode with the given per-axis labels."""
        labels = tuple(labels)
        if len(labels) != self.spec.dimension:
            raise GridMismatchError("label tuple has wrong length")
        offset = 1 if self.spec.domain_kind == DIRICHLET_CUBE else 0
        pos = tuple(int(lab) - offset for lab in labels)
        n = self.spec.modes_per_axis
        if any(p < 0 or p >= n for p in pos):
            raise GridMismatchError(f"mode {labels} outside basis range")
        return int(np.ravel_multi_index(pos, (n,) * self.spec.dimension))

    def default_grid(self, points_per_axis: int | None = None) -> "Grid":
        """Quadrature grid dense enough to dealias quadratic products."""
        n = self.spec.modes_per_axis
        length = self.spec.side_length
        if self.spec.domain_kind == DIRICHLET_CUBE:
            pts = points_per_axis if points_per_axis is not None else 2 * n + 3
            if pts - 2 < n:
                raise ConfigurationError(
                    "grid cannot resolve the basis: need at least "
                    f"{n + 2} points per axis"
                )
            axis = np.linspace(0.0, length, pts)
            h = length / (pts - 1)
            weights = np.full(pts, h)
            weights[0] = weights[-1] = h / 2.0
        else:
            pts = points_per_axis if points_per_axis is not None else 2 * n + 1
            if pts < n:
                raise ConfigurationError(
                    "grid cannot resolve the basis: need at least "
                    f"{n} points per axis"
                )
            axis = np.arange(pts) * (length / pts)
            weights = np.full(pts, length / pts)
        return Grid(
            kind=self.spec.domain_kind,
            side_length=length,
            axes=(axis,) * self.spec.dimension,
            weights=(weights,) * self.spec.dimension,
        )


@dataclass(frozen=True)
class Grid:
    """Tensor-product sample points with quadrature weights per axis."""

    kind: str
    side_length: float
    axes: tuple
    weights: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        weights = tuple(np.asarray(w, dtype=float) for w in self.weights)
        for a, w in zip(axes, weights):
            if a.ndim != 1 or w.shape != a.shape:
                raise GridMismatchError("axis and weight arrays must match")
            a.setflags(write=False)
            w.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def dimension(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        """All grid points as an array of shape (n_points, dimension)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    @cached_property
    def weight_tensor(self) -> np.ndarray:
        w = self.weights[0]
        for extra in self.weights[1:]:
            w = np.multiply.outer(w, extra)
        w = np.asarray(w)
        w.setflags(write=False)
        return w

    def matches(self, other: "Grid") -> bool:
        return (
            self.kind == other.kind
            and self.side_length == other.side_length
            and self.shape == other.shape
            and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
        )


@dataclass(frozen=True)
class SpectralField:
    """Coefficient vector of a field in a spectral basis."""

    basis: SpectralBasis
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float, copy=True).reshape(-1)
        if coeffs.size != self.basis.n_modes:
            raise GridMismatchError(
                f"{coeffs.size} coefficients for a basis of "
                f"{self.basis.n_modes} modes"
            )
        if not np.all(np.isfinite(coeffs)):
            raise NumericError("spectral coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def l2_norm(self) -> float:
        """L2 norm of the field; coefficients are orthonormal."""
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True)
class PhysicalField:
    """Field samples on a tensor-product grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values of shape {vals.shape} on a grid of shape "
                f"{self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise NumericError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def unit_field(basis: SpectralBasis, index) -> SpectralField:
    """Field equal to a single basis mode.

    ``index`` is either a flat mode index or a per-axis label tuple.
    """
    coeffs = np.zeros(basis.n_modes)
    if np.isscalar(index):
        coeffs[int(index)] = 1.0
    else:
        coeffs[basis.mode_position(index)] = 1.0
    return SpectralField(basis, coeffs)


class GridTransform:
    """Cached forward/backward transforms between a basis and a grid.

    Quadrature projection is exact for fields that are products of at
    most two retained modes whenever the grid satisfies the dealiasing
    rule of :meth:`SpectralBasis.default_grid`.
    """

    def __init__(self, basis: SpectralBasis, grid: Grid | None = None):
        self.basis = basis
        self.grid = grid if grid is not None else basis.default_grid()
        _check_grid_compatible(basis, self.grid)
        self._value_mats = [self.basis.axis_values(a) for a in self.grid.axes]
        self._weighted_mats = [
            mat * w[:, None] for mat, w in zip(self._value_mats, self.grid.weights)
        ]

    def to_grid(self, coefficients: np.ndarray) -> np.ndarray:
        """Synthesize a coefficient vector into grid samples."""
        d = self.basis.spec.dimension
        n = self.basis.spec.modes_per_axis
        tensor = np.asarray(coefficients, dtype=float).reshape((n,) * d)
        for mat in self._value_mats:
            # contract the leading mode axis; spatial axes accumulate at the end
            tensor = np.tensordot(tensor, mat, axes=([0], [1]))
        return tensor

    def to_coefficients(self, values: np.ndarray) -> np.ndarray:
        """Project grid samples onto the basis via quadrature."""
        tensor = np.asarray(values, dtype=float)
        if tensor.shape != self.grid.shape:
            raise GridMismatchError(
                f"values of shape {tensor.shape}, grid of shape {self.grid.shape}"
            )
        for mat in self._weighted_mats:
            tensor = np.tensordot(tensor, mat, axes=([0], [0]))
        return tensor.reshape(-1)


def _check_grid_compatible(basis: SpectralBasis, grid: Grid) -> None:
    if grid.kind != basis.spec.domain_kind:
        raise GridMismatchError(
            f"grid kind {grid.kind!r} does not match basis "
            f"{basis.spec.domain_kind!r}"
        )
    if grid.side_length != basis.spec.side_length:
        raise GridMismatchError("grid and basis side lengths differ")
    if grid.dimension != basis.spec.dimension:
        raise GridMismatchError("grid and basis dimensions differ")
    n = basis.spec.modes_per_axis
    for axis_points in grid.shape:
        interior = axis_points - 2 if grid.kind == DIRICHLET_CUBE else axis_points
        if interior < n:
            raise GridMismatchError(
                "grid is too coarse to resolve the basis modes"
            )


def build_basis(spec: BasisSpec) -> SpectralBasis:
    """Construct the orthonormal Laplacian eigenbasis for ``spec``."""
    return SpectralBasis(spec)


def project(field: PhysicalField, basis: SpectralBasis) -> SpectralField:
    """Inner products of a sampled field against every basis mode."""
    transform = GridTransform(basis, field.grid)
    return SpectralField(basis, transform.to_coefficients(field.values))


def synthesize(field: SpectralField, grid: Grid | None = None) -> PhysicalField:
    """Evaluate the mode sum of a coefficient vector on a grid."""
    transform = GridTransform(field.basis, grid)
    return PhysicalField(transform.grid, transform.to_grid(field.coefficients))


def inner_product(a: PhysicalField, b: PhysicalField) -> float:
    """Quadrature approximation of the L2 pairing of two sampled fields."""
    if not a.grid.matches(b.grid):
        raise GridMismatchError("inner product requires matching grids")
    return float(np.sum(a.values * b.values * a.grid.weight_tensor))


def poincare_constant(basis: SpectralBasis) -> float:
    """Sharp coercivity constant of the negative Laplacian.

    Equals the smallest eigenvalue; undefined on the torus, whose
    constant mode has eigenvalue zero.
    """
    if basis.spec.domain_kind != DIRICHLET_CUBE:
        raise NotApplicableError(
            "the torus has a zero mode; no positive coercivity constant"
        )
    return float(basis.eigenvalues.min())


def apply_spectral_multiplier(
    field: SpectralField, multiplier: Callable[[float], float]
) -> SpectralField:
    """Multiply each coefficient by a function of its eigenvalue.

    Realizes any operator diagonal in the basis: the elliptic operator
    itself (``m(lam) = lam``), a spectral cutoff
    (``m(lam) = -lam * (lam <= cut)``), fractional powers
    (``m(lam) = lam ** alpha``), and semigroups
    (``m(lam) = exp(-t * lam ** alpha)``).
    """
    factors = np.array([multiplier(lam) for lam in field.basis.eigenvalues])
    if not np.all(np.isfinite(factors)):
        raise NumericError("spectral multiplier produced non-finite values")
    return SpectralField(field.basis, field.coefficients * factors)
