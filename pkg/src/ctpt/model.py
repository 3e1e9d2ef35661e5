"""Physical parameters, spatial grids and the two state representations."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels

DEFAULT_X_MAX = 12.0
DEFAULT_POINTS = 1024
DEFAULT_DIM = 64
MIN_POINTS = 16
TRUNCATION_TOL = 1e-10
BOUNDARY_TOL = 1e-12


class DomainWarning(UserWarning):
    """The grid is too small for the requested basis or state."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhysicalParams:
    """Mass ``m0``, driving frequency ``omega``, target frequency ``omega0`` and ``hbar``."""

    m0: float = 1.0
    omega: float = 1.0
    omega0: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m0", "omega", "omega0", "hbar"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def shift(self) -> float:
        """Imaginary displacement ``1/(m0*omega0**2)`` carried by U and C."""
        return 1.0 / (self.m0 * self.omega0**2)

    @property
    def length_scale(self) -> float:
        """Oscillator length ``sqrt(hbar/(m0*omega0))``."""
        return math.sqrt(self.hbar / (self.m0 * self.omega0))


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n_points: int

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return _grid_points(self.x_min, self.x_max, self.n_points)

    def integrate(self, values) -> complex:
        """Trapezoidal quadrature over the whole grid."""
        return np.trapezoid(values, dx=self.h)


@lru_cache(maxsize=64)
def _grid_points(x_min, x_max, n):
    x = np.linspace(x_min, x_max, n)
    # enforce exact reflection symmetry so parity is an index reversal
    x = 0.5 * (x - x[::-1])
    x.setflags(write=False)
    return x


def make_grid(x_min: float = -DEFAULT_X_MAX, x_max: float = DEFAULT_X_MAX,
              n_points: int = DEFAULT_POINTS, *, min_points: int = MIN_POINTS) -> SpatialGrid:
    """Uniform grid with inclusive endpoints on a domain symmetric about zero.

    Raises
    ------
    ValueError
        If ``x_min != -x_max`` (parity must map grid points onto grid points)
        or if fewer than ``min_points`` points are requested.
    """
    if not (x_max > 0 and x_min == -x_max):
        raise ValueError(
            f"grid must be symmetric about the origin (x_min = -x_max) so that parity is an "
            f"exact index reversal; got [{x_min}, {x_max}]"
        )
    if n_points < max(min_points, 3):
        raise ValueError(f"n_points must be at least {max(min_points, 3)}, got {n_points}")
    return SpatialGrid(float(x_min), float(x_max), int(n_points))


@dataclass(frozen=True, eq=False)
class GridWave:
    grid: SpatialGrid
    amplitudes: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        amps = _frozen(self.amplitudes, np.complex128)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    def norm_l2(self) -> float:
        """Squared L2 norm by trapezoidal quadrature."""
        return float(self.grid.integrate(np.abs(self.amplitudes) ** 2))

    def with_amplitudes(self, amplitudes, **diagnostics) -> "GridWave":
        diag = dict(self.diagnostics)
        diag.update(diagnostics)
        return GridWave(self.grid, amplitudes, diag)

    def __add__(self, other):
        _same_grid(self, other)
        return GridWave(self.grid, self.amplitudes + other.amplitudes)

    def __sub__(self, other):
        _same_grid(self, other)
        return GridWave(self.grid, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar):
        return GridWave(self.grid, self.amplitudes * scalar, dict(self.diagnostics))

    __rmul__ = __mul__


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("waves live on different grids")


@dataclass(frozen=True, eq=False)
class BasisExpansion:
    """Coefficients over the oscillator eigenfunctions phi_0..phi_{dim-1}."""

    params: PhysicalParams
    coeffs: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        c = _frozen(self.coeffs, np.complex128)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty vector")
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def tail_mass(self) -> float:
        total = float(np.sum(np.abs(self.coeffs) ** 2))
        if total == 0.0:
            return 0.0
        return float(abs(self.coeffs[-1]) ** 2 / total)

    def converged(self, tol: float = TRUNCATION_TOL) -> bool:
        return self.tail_mass() < tol

    @classmethod
    def unit(cls, params: PhysicalParams, n: int, dim: int = DEFAULT_DIM) -> "BasisExpansion":
        c = np.zeros(dim, dtype=np.complex128)
        c[n] = 1.0
        return cls(params, c)


def scaled_argument(z, params: PhysicalParams):
    """Dimensionless oscillator coordinate z*sqrt(m0*omega0/hbar)."""
    return np.asarray(z, dtype=np.complex128) / params.length_scale


def basis_functions(params: PhysicalParams, dim: int, z) -> np.ndarray:
    """phi_n(z) for n < dim at (complex) points z, shape (dim, len(z))."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        vals = _kernels.hermite_functions(dim, scaled_argument(z, params))
    return vals / math.sqrt(params.length_scale)


@lru_cache(maxsize=32)
def _real_basis(params: PhysicalParams, dim: int, grid: SpatialGrid) -> np.ndarray:
    vals = basis_functions(params, dim, grid.x).real.copy()
    vals.setflags(write=False)
    return vals


def synthesize(expansion: BasisExpansion, grid: SpatialGrid, shift: complex = 0.0) -> GridWave:
    """Evaluate sum_n c_n phi_n(x + shift) on the grid.

    Non-finite evaluations (exponent overflow far outside the Gaussian
    support) are clamped to zero and reported in ``diagnostics['clamped']``.
    """
    if shift == 0:
        vals = _real_basis(expansion.params, expansion.dim, grid)
    else:
        vals = basis_functions(expansion.params, expansion.dim, grid.x + shift)
    with np.errstate(invalid="ignore", over="ignore"):
        amps = expansion.coeffs @ vals
    bad = ~np.isfinite(amps)
    diag = {}
    if bad.any():
        amps = np.where(bad, 0.0, amps)
        diag["clamped"] = int(bad.sum())
    return GridWave(grid, amps, diag)


def project(wave: GridWave, params: PhysicalParams, dim: int = DEFAULT_DIM,
            boundary_tol: float = BOUNDARY_TOL) -> BasisExpansion:
    """Coefficients c_n = int phi_n(x) wave(x) dx by trapezoidal quadrature.

    The quadrature only sees the wave inside the grid, so the truncation
    error is set by the wave's magnitude at the edge.  When that exceeds
    ``boundary_tol``, ``diagnostics['boundary_warning']`` is set and a
    :class:`DomainWarning` is emitted.  The edge value of phi_{dim-1} is
    recorded as ``basis_edge`` for information.
    """
    grid = wave.grid
    vals = _real_basis(params, dim, grid)
    weights = np.full(grid.n_points, grid.h)
    weights[0] = weights[-1] = 0.5 * grid.h
    coeffs = vals @ (weights * wave.amplitudes)
    a = wave.amplitudes
    edge = float(max(abs(a[0]), abs(a[-1]), abs(a[1]), abs(a[-2])))
    diag = dict(wave.diagnostics)
    diag["boundary_magnitude"] = edge
    diag["basis_edge"] = float(abs(vals[-1, 0]))
    if edge > boundary_tol:
        diag["boundary_warning"] = True
        warnings.warn(
            f"domain [{grid.x_min}, {grid.x_max}] too small: boundary magnitude "
            f"{edge:.3e} exceeds {boundary_tol:.1e}",
            DomainWarning,
            stacklevel=2,
        )
    return BasisExpansion(params, coeffs, diag)
